use loopsign::checks::grad::gradcheck_config;
use loopsign::harness::ManifoldChoice;
use loopsign::model::LoopVariant;

fn main() {
    for h in [1e-3, 1e-4, 1e-5, 1e-6] {
        let (checks, worst) = gradcheck_config(LoopVariant::Decoder, ManifoldChoice::Poincare, h).unwrap();
        let worst_name = checks.iter().max_by(|a,b| a.max_rel_err.partial_cmp(&b.max_rel_err).unwrap()).unwrap();
        println!("h={h:.0e}: worst rel err {:.3e} at {}", worst, worst_name.name);
    }
}
