// Scratch calibration runs; not part of the library.
use lrpr::rng::{gaussian_matrix, gaussian_vector, stream_rng};
use lrpr::synth::{gen_ground_truth, gen_measurements, SynthConfig};
use lrpr::{altmin_lowrap, phase_dist, rwf_solve, AltMinConfig, RankRule, RwfConfig};

fn main() {
    // RWF failure rates with restarts.
    for (d, m) in [(2usize, 40usize), (2, 60), (4, 60), (4, 80)] {
        let mut fails = 0;
        for trial in 0..600u64 {
            let mut rng = stream_rng(trial, 61, 0);
            let xstar = gaussian_vector(&mut rng, d);
            let a = gaussian_matrix(&mut rng, d, m);
            let y = a.tr_mul(&xstar).map(|v| v.abs());
            let sol = rwf_solve(&y, &a, &RwfConfig::with_iters(300));
            if phase_dist(&sol.x, &xstar).unwrap() > 1e-6 * xstar.norm() {
                fails += 1;
            }
        }
        println!("rwf d={d} m={m}: {fails}/600 failures (with restarts)");
    }

    // Criterion-1 pilot: n=200, q=400, r=4, m=80, T=30, gap-rule rank.
    let t0 = std::time::Instant::now();
    let mut finals = Vec::new();
    for trial in 0..6u64 {
        let cfg_s = SynthConfig { n: 200, q: 400, r: 4, m: 80, seed: 50 + trial, split: None };
        let gt = gen_ground_truth(&cfg_s).unwrap();
        let batch = gen_measurements(&gt.xstar, cfg_s.m, 150 + trial).unwrap();
        let cfg = AltMinConfig { t_outer: 30, rank: RankRule::MaxGap, ..Default::default() };
        match altmin_lowrap(&batch, &cfg, Some(&gt)) {
            Ok(res) => {
                let iters = res.trace.len();
                println!(
                    "trial {trial}: rank {} final matdist {:.2e} se {:.2e} ({iters} rows, {:.2}s)",
                    res.rank_used,
                    res.final_matdist_rel().unwrap(),
                    res.final_se().unwrap(),
                    res.trace.last().unwrap().elapsed_s
                );
                finals.push(res.final_matdist_rel().unwrap());
            }
            Err(e) => println!("trial {trial}: FAILED {e}"),
        }
    }
    println!("pilot total {:.1}s", t0.elapsed().as_secs_f64());
    let _ = finals;
}
