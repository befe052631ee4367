//! Results must not depend on the execution mode.

use catsim::reduction::{self, QuadratureSpec};
use catsim::{classical, normal_basis, Evolution, Execution, ModelParams};

#[test]
fn parallel_and_sequential_agree_bit_for_bit() {
    let p = ModelParams::paper();
    let nb = normal_basis(&p).unwrap();
    let evo = Evolution::new(nb.clone());
    let quad = QuadratureSpec::trapezoid(64);
    let a = reduction::reduce_all_with(Execution::Parallel, &evo, 2.505, &quad).unwrap();
    let b = reduction::reduce_all_with(Execution::Sequential, &evo, 2.505, &quad).unwrap();
    assert_eq!(a, b);

    let grid = reduction::output_grid(20.0, 41);
    let a = reduction::reduce_with(Execution::Parallel, &evo, 3, 2.505, &grid, &quad).unwrap();
    let b = reduction::reduce_with(Execution::Sequential, &evo, 3, 2.505, &grid, &quad).unwrap();
    assert_eq!(a, b);

    let ea = classical::ensemble_with(Execution::Parallel, &nb, &p.cats, 5.0, 0.01);
    let eb = classical::ensemble_with(Execution::Sequential, &nb, &p.cats, 5.0, 0.01);
    assert_eq!(ea.samples, eb.samples);
}
