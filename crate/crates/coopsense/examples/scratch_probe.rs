use coopsense::channel::ChannelParams;
use coopsense::experiments::{run_fusion_experiment, FusionExperiment};

fn main() {
    for s in [0.5, 0.7, 0.9] {
        println!("=== channel un-occupancy s = {s} ===");
        println!("{:>3} {:>5} {:>9} {:>9} {:>9} {:>9} {:>11}", "n", "rho", "OR", "AND", "adaptive", "best-k", "verdict");
        for n in [5usize, 10] {
            for rho in [0.1, 0.3, 0.5, 0.9] {
                let mut cfg = FusionExperiment::new(n, rho).unwrap();
                cfg.channel = ChannelParams::from_unoccupancy(s, 10.0).unwrap();
                cfg.replications = 10;
                let r = run_fusion_experiment(&cfg).unwrap();
                let (bk, bv) = r.best_fixed();
                let or = r.mean_or();
                let and = r.mean_and();
                let ad = r.mean_adaptive();
                let bound = or.min(and) + 0.02;
                println!("{n:>3} {rho:>5} {or:>9.4} {and:>9.4} {ad:>9.4} {bv:>7.4}@{bk} {:>11}",
                    if ad <= bound { "ok" } else { "EXCEEDS" });
            }
        }
    }
}
