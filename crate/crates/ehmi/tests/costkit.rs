use ehmi::data::bundled_cpi;
use ehmi_core::costkit::*;
use ehmi_core::scoring::{score_cost, CE_BASELINE};
use proptest::prelude::*;

fn ym(s: &str) -> YearMonth {
    s.parse().unwrap()
}

#[test]
fn tail_light_price() {
    let cpi = bundled_cpi();
    let ce1 = adjust_inflation(2.0 * 20.99, ym("2024-05"), &cpi).unwrap();
    assert!((ce1 - 39.68).abs() <= 0.01, "{ce1}");
    let lamp = adjust_inflation(1.20, ym("2024-09"), &cpi).unwrap();
    assert!((lamp - 1.13).abs() <= 0.005, "{lamp}");
}

#[test]
fn led_display_price_brackets_the_source_month() {
    // 4606.90 implies a source index of about 282.66, between January and February 2022.
    let cpi = bundled_cpi();
    let median = median_of_range(3900.0, 4875.0).unwrap();
    let jan = adjust_inflation(median, ym("2022-01"), &cpi).unwrap();
    let feb = adjust_inflation(median, ym("2022-02"), &cpi).unwrap();
    assert!(feb < 4606.90 && 4606.90 < jan, "{feb} < 4606.90 < {jan}");
    let source = cpi.get(CPI_TARGET).unwrap() * median / 4606.90;
    assert!((source - 282.66).abs() < 0.01, "{source}");
}

#[test]
fn helper_values() {
    let kwh = energy_kwh(570.0, 293.33).unwrap();
    assert!((energy_cost(kwh, KWH_RATE_DEC_2022).unwrap() - 27.59).abs() <= 0.01);
    assert_eq!(amortized_yearly_cost(4606.90, 0.0, 0.0, 2.0).unwrap(), 2303.45);
    assert!((array_cost(1.13, 7).unwrap() - 7.91).abs() < 1e-12);
    assert_eq!(array_cost(1.13, 0).unwrap(), 0.0);
    assert_eq!(median_of_range(40.0, 51.0).unwrap(), 45.5);
}

/// The bundled FBL answers carry the recorded CE4 of 53.94. The amortization
/// formula applied to the recorded inputs over 28 months gives about 34.07.
#[test]
fn fbl_maintenance_is_the_recorded_value() {
    let formula = amortized_yearly_cost(39.68, 34.13, 45.50, 28.0 / 12.0).unwrap();
    assert!((formula - 34.07).abs() < 0.005, "{formula}");
    let fbl = ehmi::data::bundled_answer("fbl").unwrap();
    let recorded = &fbl.cost.answers["CE4"];
    assert_eq!(*recorded, ehmi_core::answers::AnswerValue::Number(53.94));
    assert!((53.94 - formula).abs() > 19.0);
}

#[test]
fn fbl_unknown_operation_cost() {
    let cpi = bundled_cpi();
    let fbl = CostInputs {
        buy: CostInput::Amount { value: 39.68, date: None },
        install_new: CostInput::Range { lo: 40.0, hi: 51.0, date: None },
        install_existing: CostInput::Range { lo: 40.0, hi: 51.0, date: None },
        maintenance_yearly: CostInput::Amount { value: 53.94, date: None },
        operation_yearly: CostInput::Unknown,
    };
    let r = resolve_unknowns(&fbl, &cpi).unwrap();
    assert_eq!(r[4], 53.94);
    assert_eq!(r[1], 45.5 * NEW_VEHICLE_FACTOR); // 34.125, shown as 34.13
}

fn input() -> impl Strategy<Value = CostInput> {
    prop_oneof![
        (0.0..5000.0f64).prop_map(|value| CostInput::Amount { value, date: None }),
        (0.0..5000.0f64, 0.0..500.0f64).prop_map(|(lo, d)| CostInput::Range { lo, hi: lo + d, date: None }),
        (0.0..5000.0f64, 2015u16..2025, 1u8..13)
            .prop_map(|(value, y, m)| CostInput::Amount { value, date: Some(YearMonth::new(y, m).unwrap()) }),
        Just(CostInput::Unknown),
    ]
}

fn inputs() -> impl Strategy<Value = CostInputs> {
    proptest::array::uniform5(input()).prop_map(
        |[buy, install_new, install_existing, maintenance_yearly, operation_yearly]| CostInputs {
            buy,
            install_new,
            install_existing,
            maintenance_yearly,
            operation_yearly,
        },
    )
}

proptest! {
    #[test]
    fn anchor_is_idempotent(amount in 0.0..10_000.0f64, y in 2015u16..2025, m in 1u8..13) {
        let cpi = bundled_cpi();
        let once = adjust_inflation(amount, YearMonth::new(y, m).unwrap(), &cpi).unwrap();
        prop_assert_eq!(adjust_inflation(once, CPI_TARGET, &cpi).unwrap(), once);
    }

    #[test]
    fn combining_is_commutative_and_associative(parts in proptest::collection::vec(proptest::array::uniform5(0.0..1000.0f64), 3)) {
        let ab_c = combine_technology_costs(&[combine_technology_costs(&parts[..2]).unwrap(), parts[2]]).unwrap();
        let a_bc = combine_technology_costs(&[parts[0], combine_technology_costs(&parts[1..]).unwrap()]).unwrap();
        let cba = combine_technology_costs(&[parts[2], parts[1], parts[0]]).unwrap();
        for i in 0..5 {
            prop_assert!((ab_c[i] - a_bc[i]).abs() < 1e-9);
            prop_assert!((ab_c[i] - cba[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn unknowns_take_the_largest_known(x in inputs()) {
        let cpi = bundled_cpi();
        let known: Vec<usize> = (0..5).filter(|i| x.as_array()[*i] != CostInput::Unknown).collect();
        let Ok(r) = resolve_unknowns(&x, &cpi) else {
            prop_assert!(known.is_empty());
            return Ok(());
        };
        let max = known.iter().map(|i| r[*i]).fold(f64::MIN, f64::max);
        for i in (0..5).filter(|i| !known.contains(i)) {
            let want = if i == INSTALL_NEW { max * NEW_VEHICLE_FACTOR } else { max };
            prop_assert_eq!(r[i], want);
        }
    }

    #[test]
    fn cost_score_falls_as_inputs_rise(x in inputs(), slot in 0usize..5, bump in 0.0..1000.0f64) {
        let cpi = bundled_cpi();
        let Ok(before) = resolve_unknowns(&x, &cpi) else { return Ok(()) };
        let mut arr = x.as_array();
        arr[slot] = match arr[slot] {
            CostInput::Amount { value, date } => CostInput::Amount { value: value + bump, date },
            CostInput::Range { lo, hi, date } => CostInput::Range { lo: lo + bump, hi: hi + bump, date },
            CostInput::Unknown => return Ok(()),
        };
        let [buy, install_new, install_existing, maintenance_yearly, operation_yearly] = arr;
        let y = CostInputs { buy, install_new, install_existing, maintenance_yearly, operation_yearly };
        let after = resolve_unknowns(&y, &cpi).unwrap();
        prop_assert!(score_cost(&after, CE_BASELINE).unwrap() <= score_cost(&before, CE_BASELINE).unwrap());
    }
}
