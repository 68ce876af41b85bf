use causal_hts::graph::Dag;
use causal_hts::stats::{kci_test, TestConfig};
use causal_hts::synth::{sample_linear, NoiseFamily, ScmConfig};

fn main() {
    let g = Dag::new(3, [(0, 1), (1, 2)]).unwrap();
    let cfg = ScmConfig { noise: NoiseFamily::Uniform, ..ScmConfig::default() };
    for seed in 1..=10u64 {
        let ds = sample_linear(&g, 800, &cfg, seed).unwrap();
        let tc = TestConfig::default();
        // null: 0 indep 2 given 1 (want p > .05); alt: 1 dep 2 given 0 (want p <= .05)
        let p_null = kci_test(ds.column(0), ds.column(2), &ds.columns(&[1]), &tc).unwrap().p_value;
        let p_alt = kci_test(ds.column(1), ds.column(2), &ds.columns(&[0]), &tc).unwrap().p_value;
        println!("seed={seed} p_null={p_null:.4} p_alt={p_alt:.4}");
    }

    // criterion-9 shape: conditional null rejection rate at alpha=.05, n=500
    let mut rejections = 0usize;
    let reps = 200u64;
    for seed in 0..reps {
        let ds = sample_linear(&g, 500, &cfg, 40_000 + seed).unwrap();
        let tc = TestConfig::default();
        let p = kci_test(ds.column(0), ds.column(2), &ds.columns(&[1]), &tc).unwrap().p_value;
        if p <= tc.alpha {
            rejections += 1;
        }
    }
    println!(
        "conditional null rejections: {rejections}/{reps} = {:.3}",
        rejections as f64 / reps as f64
    );
}
