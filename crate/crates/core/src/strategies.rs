//! Proptest generators shared by the module tests.

use num_complex::Complex64;
use proptest::prelude::*;

use crate::response::{Grid, Tvfr};

pub fn tvfr() -> impl Strategy<Value = Tvfr> {
    (2usize..12, 3usize..24).prop_flat_map(|(m, n)| {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), m * n).prop_map(move |v| {
            let values = v
                .into_iter()
                .map(|(re, im)| Complex64::new(re, im))
                .collect();
            Tvfr::new(
                Grid::new(0.0, 0.01, m).unwrap(),
                Grid::new(32e3, 1e3, n).unwrap(),
                values,
            )
            .unwrap()
        })
    })
}
