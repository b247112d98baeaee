//! Text formats survive a write/read cycle on generated inputs.

use proptest::prelude::*;

use vrpwdn::generator::{generate, GenSpec};
use vrpwdn::ils::initialize;
use vrpwdn::io::{format_instance, format_solution, parse_instance, parse_solution};
use vrpwdn::milp::{build, format_lp, format_mps, parse_lp, parse_mps, BuildOptions, Formulation};
use vrpwdn::rng::seeded;

fn spec() -> impl Strategy<Value = GenSpec> {
    (2usize..9, 0usize..4, 1usize..3, any::<u64>()).prop_map(|(n, w, k, seed)| {
        let w = w.min(n);
        let c = if w == 0 { 0 } else { 1 + (seed as usize % w.min(2)) };
        GenSpec::uniform(n, w, c, k, seed)
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn instance_text_is_stable(spec in spec()) {
        let inst = generate(&spec).unwrap();
        let text = format_instance(&inst);
        let back = parse_instance(&text).unwrap();
        prop_assert_eq!(format_instance(&back), text);
        prop_assert_eq!(back.max_duration(), inst.max_duration());
    }

    #[test]
    fn solution_text_is_stable(spec in spec(), seed in any::<u64>()) {
        let inst = generate(&spec).unwrap();
        if let Ok(sol) = initialize(&inst, &mut seeded(seed), 50) {
            let text = format_solution(&sol);
            let back = parse_solution(&inst, &text).unwrap();
            prop_assert_eq!(&back.routes, &sol.routes);
            prop_assert_eq!(format_solution(&back), text);
        }
    }

    #[test]
    fn model_files_are_stable(spec in spec(), f in 0usize..3, with_vi in any::<bool>()) {
        let inst = generate(&spec).unwrap();
        let model = build(&inst, Formulation::ALL[f], BuildOptions { with_vi, ..Default::default() });
        let lp = format_lp(&model);
        prop_assert_eq!(format_lp(&parse_lp(&lp).unwrap()), lp);
        let mps = format_mps(&model);
        let back = parse_mps(&mps).unwrap();
        prop_assert_eq!(format_mps(&back), mps);
        prop_assert_eq!(back.family_counts(), model.family_counts());
    }
}
