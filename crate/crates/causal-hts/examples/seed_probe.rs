use causal_hts::graph::{a_top, erdos_renyi_dag, true_hierarchical_order, Dag, LinearOrder};
use causal_hts::nhts::nhts;
use causal_hts::stats::TestConfig;
use causal_hts::synth::{sample, Mechanism, NoiseFamily, ScmConfig};

fn main() {
    for noise in [NoiseFamily::Uniform, NoiseFamily::Gaussian, NoiseFamily::Laplace] {
        let mut scores = Vec::new();
        let mut base = Vec::new();
        let mut root_ok = 0usize;
        for seed in 0..20u64 {
            let g = erdos_renyi_dag(10, 10.0, 1000 + seed).unwrap();
            let cfg = ScmConfig {
                mechanism: Mechanism::Quadratic,
                noise,
                ..ScmConfig::default()
            };
            let ds = sample(&g, 300, &cfg, 2000 + seed).unwrap();
            let out = nhts(&ds, &TestConfig::default()).unwrap();
            scores.push(a_top(&out.order, &g).unwrap());
            base.push(a_top(&LinearOrder::random(10, 3000 + seed), &g).unwrap());
            let truth = true_hierarchical_order(&g);
            let true_roots: &Vec<usize> = &truth.layers()[0];
            if out.order.layers()[0].iter().all(|v| true_roots.contains(v)) {
                root_ok += 1;
            }
        }
        let mut s = scores.clone();
        s.sort_by(f64::total_cmp);
        let mut b = base.clone();
        b.sort_by(f64::total_cmp);
        let med = (s[9] + s[10]) / 2.0;
        let bmed = (b[9] + b[10]) / 2.0;
        println!(
            "{noise:?}: median={med:.3} (base {bmed:.3}, need >= {:.3}) layer0-sound {root_ok}/20",
            (bmed + 0.15).max(0.65)
        );
        println!(
            "   scores={:?}",
            s.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>()
        );
    }

    println!("=== chain-4 quadratic uniform n=1000, 20 seeds");
    let g4 = Dag::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
    let t4 = true_hierarchical_order(&g4);
    let mut exact = 0usize;
    for seed in 0..20u64 {
        let cfg = ScmConfig {
            mechanism: Mechanism::Quadratic,
            noise: NoiseFamily::Uniform,
            ..ScmConfig::default()
        };
        let ds = sample(&g4, 1000, &cfg, 5000 + seed).unwrap();
        let out = nhts(&ds, &TestConfig::default()).unwrap();
        if out.order == t4 {
            exact += 1;
        }
    }
    println!("default params: exact {exact}/20");
}
