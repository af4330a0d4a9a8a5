//! Fixtures shared by the benchmarks.

use goflab_core::dataset::Dataset;
use goflab_core::grouping::{group_by_balanced_variance, Grouping};
use goflab_core::logistic::{fit_logistic, FitOptions, FittedModel};
use goflab_core::simulate::{gen_dataset, substream, Purpose, Scenario};

pub struct Fixture {
    pub scenario: Scenario,
    pub data: Dataset,
    pub model: FittedModel,
    pub grouping: Grouping,
}

/// First realization of the `n = 500`, `G = 10` scenario with the given `m`
/// and `d`, fitted and grouped.
pub fn fixture(m: usize, d: usize) -> Fixture {
    let scenario = Scenario {
        m,
        d,
        reps: 2,
        ..Scenario::default()
    };
    let data = gen_dataset(&scenario, 0).expect("valid scenario");
    let model = fit_logistic(&data, &FitOptions::default()).expect("fit");
    let grouping = group_by_balanced_variance(
        &model,
        scenario.groups,
        &mut substream(scenario.seed, 0, Purpose::Grouping),
    )
    .expect("grouping");
    Fixture {
        scenario,
        data,
        model,
        grouping,
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixtures_build() {
        for d in [2, 10, 25] {
            let f = super::fixture(50, d);
            assert_eq!(f.data.d(), d);
            assert_eq!(f.grouping.groups(), 10);
        }
    }
}
