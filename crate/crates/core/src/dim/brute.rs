use rayon::prelude::*;

use super::{finish_sensitivity_method, DimError, DimInputs, DimResult, Method};
use crate::pricers::CallCounter;

/// Benchmark: FD sensitivities from the pricer at every node.
pub fn brute_force_dim(inputs: &DimInputs<'_>) -> Result<DimResult, DimError> {
    inputs.check()?;
    let cube = inputs.cube;
    let counter = CallCounter::new(Method::BruteForce.label());
    let m = cube.paths();
    let rows = (0..cube.node_count())
        .into_par_iter()
        .map(|node| {
            let (t, p) = (node / m, node % m);
            inputs.pricer.all_sensitivities(
                inputs.trade,
                cube.market_state(p, t),
                cube.time_points()[t],
                inputs.bumps,
                &counter,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let values = rows.into_iter().flatten().collect();
    finish_sensitivity_method(Method::BruteForce, inputs, values, counter.get())
}
