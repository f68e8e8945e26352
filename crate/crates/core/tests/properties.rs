use std::collections::BTreeMap;
use std::f64::consts::PI;

use memsynth::elements::{
    dualize, inverse_meminductance_from_spectrum, memcapacitance_from_cosines,
    memductance_from_sines,
};
use memsynth::simulation::{branch_average_power, branch_current, supply_states};
use memsynth::{
    compute_powers, decompose_load, fryze_split, project_waveform, simulate,
    synthesize_conditioner, AssignmentMode, AssignmentPolicy, Branch, BranchRole, ElementKind,
    EvenSineRoute, Harmonic, HarmonicSpectrum, LoadDecomposition, MemoryElement, PfConvention,
    SimulationConfig, SupplyVoltage,
};
use proptest::prelude::*;

const SPP: usize = 8192;

fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

fn rel_rms(got: &[f64], want: &[f64]) -> f64 {
    let diff: Vec<f64> = got.iter().zip(want).map(|(x, y)| x - y).collect();
    let scale = rms(want);
    rms(&diff) / if scale > 0.0 { scale } else { 1.0 }
}

fn coefficient() -> impl Strategy<Value = f64> {
    prop_oneof![1 => Just(0.0), 6 => -10.0..10.0f64]
}

fn supply() -> impl Strategy<Value = SupplyVoltage> {
    (0.5..400.0f64, 1.0..1000.0f64).prop_map(|(a, w)| SupplyVoltage::new(a, w).unwrap())
}

/// Up to `count` distinct orders in `1..=top`, each with an amplitude.
fn orders(top: u32, count: usize) -> impl Strategy<Value = Vec<(u32, f64)>> {
    prop::collection::btree_map(1..=top, -10.0..10.0f64, 1..=count)
        .prop_map(|m: BTreeMap<u32, f64>| m.into_iter().filter(|(_, c)| *c != 0.0).collect())
        .prop_filter("at least one nonzero term", |v: &Vec<(u32, f64)>| {
            !v.is_empty()
        })
}

fn spectrum_for(omega: f64, top: u32, count: usize) -> impl Strategy<Value = HarmonicSpectrum> {
    (
        coefficient(),
        prop::collection::btree_map(1..=top, (coefficient(), coefficient()), 1..=count),
    )
        .prop_map(move |(dc, m)| {
            let terms = m
                .into_iter()
                .filter(|(_, (a, b))| *a != 0.0 || *b != 0.0)
                .map(|(n, (a, b))| Harmonic::new(n, a, b))
                .collect();
            HarmonicSpectrum::new(omega, dc, terms).unwrap()
        })
}

fn case(top: u32, count: usize) -> impl Strategy<Value = (SupplyVoltage, HarmonicSpectrum)> {
    supply().prop_flat_map(move |s| (Just(s), spectrum_for(s.omega(), top, count)))
}

fn policy() -> impl Strategy<Value = AssignmentPolicy> {
    (
        prop_oneof![
            Just(AssignmentMode::Capacitive),
            Just(AssignmentMode::Inductive),
            Just(AssignmentMode::Auto)
        ],
        prop_oneof![
            Just(EvenSineRoute::Memristor),
            Just(EvenSineRoute::Meminductor)
        ],
    )
        .prop_map(|(m, r)| AssignmentPolicy::new(m, r))
}

fn single(supply: &SupplyVoltage, role: BranchRole, element: MemoryElement) -> LoadDecomposition {
    LoadDecomposition::new(
        *supply,
        vec![Branch {
            role,
            element,
            regularization: None,
        }],
    )
}

fn total_current(dec: &LoadDecomposition) -> Vec<f64> {
    let trace = simulate(dec, &SimulationConfig::one_period(SPP)).unwrap();
    trace.first_period_total().to_vec()
}

fn target_waveform(supply: &SupplyVoltage, terms: Vec<Harmonic>) -> Vec<f64> {
    HarmonicSpectrum::new(supply.omega(), 0.0, terms)
        .unwrap()
        .sample_period(SPP)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval_matches_rms_current((s, spec) in case(60, 20)) {
        let samples = spec.sample_period(10_000);
        let p = compute_powers(&s, &spec, PfConvention::Rms).unwrap();
        let want = p.rms_current;
        prop_assume!(want > 0.0);
        prop_assert!((rms(&samples) - want).abs() <= 1e-6 * want);
    }

    #[test]
    fn fryze_parts_are_orthogonal((s, spec) in case(60, 20)) {
        let split = fryze_split(&s, &spec).unwrap();
        let a = split.active.sample_period(4096);
        let n = split.nonactive.sample_period(4096);
        let mean = a.iter().zip(&n).map(|(x, y)| x * y).sum::<f64>() / 4096.0;
        prop_assert!(mean.abs() <= 1e-12 * rms(&a) * rms(&n) + f64::MIN_POSITIVE);
    }

    #[test]
    fn projection_round_trip((_s, spec) in case(199, 40)) {
        let m = 4 * 199;
        let got = project_waveform(&spec.sample_period(m), spec.omega(), 199).unwrap();
        let floor = 1e-3 * spec.rms();
        prop_assert!((got.dc() - spec.dc()).abs() <= 1e-9 * spec.dc().abs().max(floor));
        for n in 1..=199 {
            let (ta, tb) = spec.coefficient(n);
            let (ga, gb) = got.coefficient(n);
            prop_assert!((ga - ta).abs() <= 1e-9 * ta.abs().max(floor), "a_{n}: {ga} vs {ta}");
            prop_assert!((gb - tb).abs() <= 1e-9 * tb.abs().max(floor), "b_{n}: {gb} vs {tb}");
        }
    }

    #[test]
    fn power_factor_is_bounded((s, spec) in case(40, 15)) {
        let (a1, b1) = spec.coefficient(1);
        let spec = {
            let mut terms = spec.terms().to_vec();
            match terms.first_mut() {
                Some(h) if h.n == 1 => h.b = b1.abs(),
                _ => terms.insert(0, Harmonic::new(1, a1, 0.0)),
            }
            terms.retain(|h| h.a != 0.0 || h.b != 0.0);
            HarmonicSpectrum::new(spec.omega(), spec.dc(), terms).unwrap()
        };
        for convention in [PfConvention::Rms, PfConvention::Paper] {
            let p = compute_powers(&s, &spec, convention).unwrap();
            prop_assert!(p.apparent_power >= p.active_power.abs());
            prop_assert!((0.0..=1.0 + 1e-15).contains(&p.power_factor));
        }
    }

    #[test]
    fn memristor_reproduces_sines(s in supply(), sines in orders(50, 50)) {
        let element = memductance_from_sines(&s, &sines).unwrap();
        let got = total_current(&single(&s, BranchRole::Memductance, element));
        let want = target_waveform(&s, sines.iter().map(|&(n, b)| Harmonic::sine(n, b)).collect());
        prop_assert!(rel_rms(&got, &want) <= 1e-9);
    }

    #[test]
    fn memcapacitor_reproduces_cosines(s in supply(), cosines in orders(50, 50)) {
        let element = memcapacitance_from_cosines(&s, &cosines).unwrap();
        let got = total_current(&single(&s, BranchRole::Memcapacitance, element));
        let want = target_waveform(&s, cosines.iter().map(|&(n, a)| Harmonic::cosine(n, a)).collect());
        prop_assert!(rel_rms(&got, &want) <= 1e-9);
    }

    #[test]
    fn meminductor_reproduces_parity_terms(s in supply(), terms in orders(50, 50)) {
        let odd: Vec<_> = terms.iter().copied().filter(|(n, _)| n % 2 == 1).collect();
        let even: Vec<_> = terms.iter().copied().filter(|(n, _)| n % 2 == 0).collect();
        let element = inverse_meminductance_from_spectrum(&s, &odd, &even).unwrap();
        let got = total_current(&single(&s, BranchRole::InverseMeminductance, element));
        let harmonics = terms
            .iter()
            .map(|&(n, c)| if n % 2 == 1 { Harmonic::cosine(n, c) } else { Harmonic::sine(n, c) })
            .collect();
        prop_assert!(rel_rms(&got, &target_waveform(&s, harmonics)) <= 1e-9);
    }

    #[test]
    fn incremental_is_derivative_of_constitutive(s in supply(), terms in orders(50, 30)) {
        for element in [
            memductance_from_sines(&s, &terms).unwrap(),
            memcapacitance_from_cosines(&s, &terms).unwrap(),
        ] {
            let inc = element.incremental().unwrap();
            let back = element.constitutive().unwrap().differentiate_t_to_u().unwrap();
            let scale = inc.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
            for k in 0..inc.coeffs().len().max(back.coeffs().len()) {
                prop_assert!((inc.coeff(k) - back.coeff(k)).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn memristor_current_vanishes_with_voltage(s in supply(), sines in orders(50, 20)) {
        let element = memductance_from_sines(&s, &sines).unwrap();
        let states = supply_states(&s, &SimulationConfig::default()).unwrap();
        let i = branch_current(&element, &states).unwrap().current;
        for (u, i) in states.u.iter().zip(&i) {
            if *u == 0.0 {
                prop_assert_eq!(*i, 0.0);
            }
        }
        prop_assert_eq!(states.u[0], 0.0);
    }

    #[test]
    fn dualize_is_an_involution(s in supply(), terms in orders(30, 10)) {
        for element in [
            memductance_from_sines(&s, &terms).unwrap(),
            memcapacitance_from_cosines(&s, &terms).unwrap(),
        ] {
            let twice = dualize(&dualize(&element).unwrap()).unwrap();
            prop_assert_eq!(twice, element);
        }
    }

    #[test]
    fn decomposition_round_trip((s, spec) in case(50, 30), policy in policy()) {
        let dec = decompose_load(&s, &spec, policy).unwrap();
        prop_assert_eq!(dec.dc().and_then(MemoryElement::scalar_value), (spec.dc() != 0.0).then_some(spec.dc()));
        let got = total_current(&dec);
        prop_assert!(rel_rms(&got, &spec.sample_period(SPP)) <= 1e-9);
    }

    #[test]
    fn waveform_is_policy_invariant((s, spec) in case(50, 30)) {
        let cap = decompose_load(&s, &spec, AssignmentPolicy::new(AssignmentMode::Capacitive, EvenSineRoute::Memristor)).unwrap();
        let ind = decompose_load(&s, &spec, AssignmentPolicy::new(AssignmentMode::Inductive, EvenSineRoute::Meminductor)).unwrap();
        prop_assert!(rel_rms(&total_current(&cap), &total_current(&ind)) <= 1e-9);
    }

    #[test]
    fn companions_cancel_linear_terms((s, spec) in case(50, 30), policy in policy()) {
        let with = decompose_load(&s, &spec, policy).unwrap();
        let without = with.without_regularization().unwrap();
        prop_assert_eq!(without.companions().count(), 0);
        prop_assert!(rel_rms(&total_current(&with), &total_current(&without)) <= 1e-9);
    }

    #[test]
    fn conditioner_is_lossless_and_compensates((s, spec) in case(50, 30), policy in policy()) {
        let cond = synthesize_conditioner(&s, &spec, policy).unwrap();
        prop_assert!(cond.dc().is_none());
        let trace = simulate(&cond, &SimulationConfig::one_period(SPP)).unwrap();
        let i_c = trace.first_period_total();
        let u = &trace.u[..SPP];
        let p = u.iter().zip(i_c).map(|(u, i)| u * i).sum::<f64>() / SPP as f64;
        prop_assert!(p.abs() <= 1e-9 * rms(u) * rms(i_c) + 1e-300);

        // zero-dc load: what the supply delivers is the Fryze current alone
        let ac = spec.without_dc();
        let load = decompose_load(&s, &ac, policy).unwrap();
        let both = load.merged(&synthesize_conditioner(&s, &ac, policy).unwrap()).unwrap();
        let supplied = project_waveform(&total_current(&both), s.omega(), 50).unwrap();
        let pf = compute_powers(&s, &supplied, PfConvention::Rms).unwrap().power_factor;
        if ac.coefficient(1).1 > 1e-6 * ac.rms() {
            prop_assert!((pf - 1.0).abs() <= 1e-9, "pf = {pf}");
        }
    }

    #[test]
    fn storage_branches_draw_no_average_power((s, spec) in case(50, 30), policy in policy()) {
        let load = decompose_load(&s, &spec, policy).unwrap();
        let cond = synthesize_conditioner(&s, &spec, policy).unwrap();
        for (dec, is_cond) in [(load, false), (cond, true)] {
            let trace = simulate(&dec, &SimulationConfig::one_period(SPP)).unwrap();
            // rectangle rule over whole periods is exact for trig products
            let u = &trace.u;
            for (idx, b) in trace.branches.iter().enumerate() {
                let i = &b.response.current;
                let scale = rms(u) * rms(i);
                let p = branch_average_power(&trace, idx).unwrap();
                let storage = matches!(
                    b.kind,
                    ElementKind::Meminductor | ElementKind::Memcapacitor | ElementKind::Inductor | ElementKind::Capacitor
                );
                if storage || (is_cond && b.kind == ElementKind::Memristor) {
                    prop_assert!(p.abs() <= 1e-9 * scale + 1e-300, "{:?}: {p}", b.kind);
                }
            }
        }
    }

    #[test]
    fn chain_rule_matches_numerical_derivative(s in supply(), cosines in orders(20, 10)) {
        let element = memcapacitance_from_cosines(&s, &cosines).unwrap();
        let states = supply_states(&s, &SimulationConfig::one_period(SPP)).unwrap();
        let r = branch_current(&element, &states).unwrap();
        let q = r.charge.unwrap();
        let dt = states.t[1] - states.t[0];
        let n = SPP;
        // periodic fourth-order central differences
        let at = |k: isize| q[k.rem_euclid(n as isize) as usize];
        let numeric: Vec<f64> = (0..n as isize)
            .map(|k| (at(k - 2) - 8.0 * at(k - 1) + 8.0 * at(k + 1) - at(k + 2)) / (12.0 * dt))
            .collect();
        prop_assert!(rel_rms(&numeric, &r.current[..n]) <= 1e-6);
    }
}

#[test]
fn capacitance_column_mean_is_linear_term() {
    let (s, spec) = memsynth::loads::motivating_example();
    let cond = synthesize_conditioner(&s, &spec, AssignmentPolicy::default()).unwrap();
    let trace = simulate(&cond, &SimulationConfig::default()).unwrap();
    let b = trace
        .branches
        .iter()
        .find(|b| b.kind == ElementKind::Memcapacitor)
        .unwrap();
    let c = b.response.capacitance.as_ref().unwrap();
    let spp = trace.samples_per_period;
    let mean = c[..spp].iter().sum::<f64>() / spp as f64;
    let linear = cond.memcapacitor().unwrap().incremental().unwrap().coeff(0);
    assert!((mean - linear).abs() <= 1e-9 * linear.abs());
    // periodic with period T
    for k in 0..spp {
        assert!((c[k] - c[k + spp]).abs() <= 1e-15 * linear.abs());
    }
    let series = cond.memcapacitor().unwrap().incremental().unwrap();
    for (k, phi) in trace.phi.iter().enumerate() {
        assert_eq!(c[k], series.eval(*phi));
    }
}

#[test]
fn capacitance_mean_collects_even_degree_terms() {
    // averages of U_k(cos θ) are 1 for even k and 0 for odd k
    let s = SupplyVoltage::new(2.0, 3.0).unwrap();
    let element =
        memcapacitance_from_cosines(&s, &[(1, 1.0), (2, -0.5), (3, 0.25), (5, 2.0)]).unwrap();
    let states = supply_states(&s, &SimulationConfig::one_period(4096)).unwrap();
    let c = branch_current(&element, &states)
        .unwrap()
        .capacitance
        .unwrap();
    let mean = c[..4096].iter().sum::<f64>() / 4096.0;
    let series = element.incremental().unwrap();
    let even: f64 = (0..series.coeffs().len())
        .step_by(2)
        .map(|k| series.coeff(k))
        .sum();
    assert!((mean - even).abs() <= 1e-12 * even.abs());
}

#[test]
fn trapezoid_states_track_closed_form() {
    use memsynth::Integrator;
    let s = SupplyVoltage::new(325.0, 100.0 * PI).unwrap();
    let config = SimulationConfig {
        integrator: Integrator::Trapezoid,
        ..SimulationConfig::default()
    };
    let num = supply_states(&s, &config).unwrap();
    let exact = supply_states(&s, &SimulationConfig::default()).unwrap();
    let a_over_w = s.amplitude() / s.omega();
    for k in 0..num.len() {
        assert!((num.phi[k] - exact.phi[k]).abs() <= 1e-6 * a_over_w);
    }
}
