// scratch: timing probe for the 24-node instance at N=30
use cdro_core::instances;
use cdro_core::lp::*;
use cdro_core::model::AmbiguitySpec;
use cdro_core::opf_dc::*;
use cdro_core::scenario::{sample_gaussian_copula, split_dataset, GeneratorSpec};
use std::time::Instant;

fn main() {
    let net = instances::rts24_like();
    let spec_gen = GeneratorSpec::uniform(2, 0.5, 1000, 20240, 1000.0);
    let full = sample_gaussian_copula(&spec_gen).unwrap();
    let (ins, _oos) = split_dataset(&full, 30, 99).unwrap();
    let be = ClarabelBackend;

    for (label, spec) in [
        ("m1 th1=0.1", AmbiguitySpec::metric(0.1).unwrap()),
        ("m2 th1=0.1 th2=0.02", AmbiguitySpec::copula(0.1, 0.02).unwrap()),
        ("m2 th1=0.1 th2=2.0", AmbiguitySpec::copula(0.1, 2.0).unwrap()),
    ] {
        let t0 = Instant::now();
        let mut model = ModelBuilder::new();
        let h = build_dc_opf(&net, &ins, &spec, &DcOpfOptions::default(), 10.0/30.0, &mut model).unwrap();
        let build_s = t0.elapsed().as_secs_f64();
        println!("{label}: vars={} rows={} build={:.2}s", model.num_vars(), model.num_rows(), build_s);
        let t1 = Instant::now();
        let res = be.solve(&model, &SolveOptions::default()).unwrap();
        println!("  solve: status {:?} obj {:?} in {:.2}s", res.status, res.objective_value, t1.elapsed().as_secs_f64());
        let _ = h;
    }
}
