//! Benchmark fixtures shared by the criterion targets.

use baro_core::problems::{gresho, standard_periodic};
use baro_core::{DiscretisationType, Field, Scheme, StepControls, Stepper};

/// Initial field and stepper for the 1D standard periodic problem on `n` cells.
pub fn periodic_1d(
    n: usize,
    eps: f64,
    disc: DiscretisationType,
    scheme: Scheme,
) -> (Field, Stepper) {
    let spec = standard_periodic(eps).expect("valid eps");
    fixture(&spec, &[n], disc, scheme)
}

/// Initial field and stepper for the Gresho vortex on an `n × n` grid.
pub fn gresho_2d(n: usize, eps: f64, disc: DiscretisationType, scheme: Scheme) -> (Field, Stepper) {
    let spec = gresho(eps).expect("valid eps");
    fixture(&spec, &[n, n], disc, scheme)
}

fn fixture(
    spec: &baro_core::ProblemSpec,
    cells: &[usize],
    disc: DiscretisationType,
    scheme: Scheme,
) -> (Field, Stepper) {
    let grid = spec.grid(cells).expect("valid grid");
    let field = spec.initial_field(&grid).expect("valid initial data");
    let controls = StepControls::new(0.5, spec.default_t_final).expect("valid controls");
    let params = spec.params().expect("valid params");
    let stepper = Stepper::for_run(params, disc, scheme, &controls, &field).expect("valid stepper");
    (field, stepper)
}
