use cdro_core::instances;
use cdro_core::lp::*;
use cdro_core::model::AmbiguitySpec;
use cdro_core::opf_dc::*;
use cdro_core::scenario::{sample_gaussian_copula, split_dataset, GeneratorSpec};
use std::time::Instant;

fn main() {
    let net = instances::rts24_like();
    let full = sample_gaussian_copula(&GeneratorSpec::uniform(2, 0.5, 1000, 20240, 1000.0)).unwrap();
    let (ins, _) = split_dataset(&full, 30, 99).unwrap();
    let be = ClarabelBackend;
    let opts = DcOpfOptions::default();

    let t = Instant::now();
    let m1 = solve_day_ahead(&net, &ins, &AmbiguitySpec::metric(0.1).unwrap(), &opts, &be).unwrap();
    let m1 = m1.optimal().unwrap();
    println!("M1: obj {} rup {} in {:.1}s", m1.objective, m1.total_r_up(), t.elapsed().as_secs_f64());

    for th2 in [2.0, 0.1] {
        let t = Instant::now();
        let out = solve_day_ahead(&net, &ins, &AmbiguitySpec::copula(0.1, th2).unwrap(), &opts, &be).unwrap();
        let s = out.optimal().unwrap();
        println!("M2 th2={th2}: obj {} rup {} vbar {} doublings {} in {:.1}s",
            s.objective, s.total_r_up(), s.vbar_used, s.vbar_doublings, t.elapsed().as_secs_f64());
        println!("  |M2-M1|/M1 = {:.2e}, rup diff = {:.2e} MW", (s.objective - m1.objective).abs()/m1.objective, (s.total_r_up() - m1.total_r_up()).abs());
    }
}
