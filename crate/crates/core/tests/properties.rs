use proptest::prelude::*;

use prpwifi_core::codec::{decode_log, encode_to_vec};
use prpwifi_core::da::{
    oracle_saved_attempts, rda_flags, tdd_flags, tdd_latency, virtual_defer, DaParams, FailedCopyPolicy,
};
use prpwifi_core::metrics::{compute_report, sweep};
use prpwifi_core::sim::{generate_run, SimConfig};
use prpwifi_core::trace::{link_outcome, AttemptTrace};
use prpwifi_core::{CopyRecord, DurationNs, PacketRecord, PhyParams, SignedDurationNs, TimePoint};

const T0: u64 = 1_000_000_000;

fn phy() -> PhyParams {
    PhyParams::default()
}

/// Builds a copy from attempt gaps (us) with all but possibly the last
/// attempt failing.
fn copy_from(gaps: &[u64], delivered: bool) -> CopyRecord {
    let p = phy();
    let data = p.data_frame_duration;
    let mut t = T0;
    let mut trace = Vec::new();
    for (k, g) in gaps.iter().enumerate() {
        let start = t + g * 1_000;
        let ok = delivered && k + 1 == gaps.len();
        trace.push(AttemptTrace {
            ordinal: k as u32 + 1,
            start_on_air: TimePoint(start),
            data_duration: data,
            ack_duration: ok.then_some(p.ack_frame_duration),
            succeeded: ok,
        });
        t = start + data.0 + if ok { (p.sifs + p.ack_frame_duration).0 } else { p.ack_timeout.0 };
    }
    CopyRecord {
        loss: !delivered,
        t_t: TimePoint(T0),
        t_x: TimePoint(t),
        attempts: gaps.len() as u32,
        final_data_duration: Some(data),
        final_ack_duration: delivered.then_some(p.ack_frame_duration),
        full_trace: Some(trace),
    }
}

fn arb_copy() -> impl Strategy<Value = CopyRecord> {
    (prop::collection::vec(34u64..600, 1..6), prop::bool::weighted(0.85)).prop_map(|(g, ok)| copy_from(&g, ok))
}

fn arb_packet() -> impl Strategy<Value = PacketRecord> {
    (arb_copy(), arb_copy()).prop_map(|(a, b)| PacketRecord { index: 1, copies: vec![a, b] })
}

proptest! {
    #[test]
    fn rda_flags_shrink_with_t_lre(p in arb_packet(), lo in 0u64..1000, extra in 0u64..1000) {
        let phys = [phy(), phy()];
        let a = rda_flags(&p, DurationNs::from_us(lo), &phys, FailedCopyPolicy::Oracle).unwrap();
        let b = rda_flags(&p, DurationNs::from_us(lo + extra), &phys, FailedCopyPolicy::Oracle).unwrap();
        for k in 0..2 {
            prop_assert!(!b.e[k] || a.e[k]);
        }
    }

    #[test]
    fn tdd_flags_monotone_in_td(p in arb_packet(), td in -800i64..800, step in 0i64..400, lre in 0u64..300) {
        let phys = [phy(), phy()];
        let lre = DurationNs::from_us(lre);
        let lo = tdd_flags(&p, SignedDurationNs::from_us(td), lre, &phys, FailedCopyPolicy::Oracle).unwrap();
        let hi = tdd_flags(&p, SignedDurationNs::from_us(td + step), lre, &phys, FailedCopyPolicy::Oracle).unwrap();
        prop_assert!(!lo.e[1] || hi.e[1]);
        prop_assert!(!hi.e[0] || lo.e[0]);
    }

    #[test]
    fn tdd_at_zero_is_rda(p in arb_packet(), lre in 0u64..1000) {
        let phys = [phy(), phy()];
        let lre = DurationNs::from_us(lre);
        for policy in [FailedCopyPolicy::PessimisticZero, FailedCopyPolicy::Oracle] {
            prop_assert_eq!(
                tdd_flags(&p, SignedDurationNs::ZERO, lre, &phys, policy).unwrap(),
                rda_flags(&p, lre, &phys, policy).unwrap()
            );
        }
    }

    #[test]
    fn deferral_never_improves_latency(p in arb_packet(), td in -1000i64..1000) {
        let phys = [phy(), phy()];
        let pow = link_outcome(&p, &phys).latency;
        let tdd = tdd_latency(&p, SignedDurationNs::from_us(td), &phys);
        prop_assert_eq!(pow.is_some(), tdd.is_some());
        prop_assert!(tdd >= pow);
    }

    #[test]
    fn early_termination_implies_saved_attempt(p in arb_packet(), lre in 0u64..500, td in -300i64..300) {
        let phys = [phy(), phy()];
        let (lre, td) = (DurationNs::from_us(lre), SignedDurationNs::from_us(td));
        let f = tdd_flags(&p, td, lre, &phys, FailedCopyPolicy::Oracle).unwrap();
        let exact = oracle_saved_attempts(&p, lre, td).unwrap();
        for ((&w, c), &e) in exact.iter().zip(&p.copies).zip(&f.e) {
            prop_assert!(w <= c.attempts);
            prop_assert!(!e || w < c.attempts);
        }
        prop_assert!(!f.z_link || f.e_link());
    }
}

#[test]
fn tdd_report_matches_virtually_deferred_rda() {
    let log = generate_run(&SimConfig::duplex(4_000, 91, 2)).unwrap();
    for td in [-250i64, -100, -50, 50, 100, 250] {
        let td = SignedDurationNs::from_us(td);
        let shifted = virtual_defer(&log, td, Some(DurationNs::from_ms(1))).unwrap();
        shifted.validate().unwrap();
        for lre in [0, 100, 500] {
            let lre = DurationNs::from_us(lre);
            let direct = compute_report(&log, &DaParams::tdd(lre, td)).unwrap();
            let via = compute_report(&shifted, &DaParams::rda(lre)).unwrap();
            assert_eq!(
                direct.channels.iter().map(|c| c.e_bar).collect::<Vec<_>>(),
                via.channels.iter().map(|c| c.e_bar).collect::<Vec<_>>()
            );
            assert_eq!(direct.link.e_bar, via.link.e_bar);
            assert_eq!(direct.link.z_bar, via.link.z_bar);
            assert_eq!(direct.link.latency, via.link.latency);
            assert_eq!(direct.link.w_bar_exact, via.link.w_bar_exact);
        }
    }
}

#[test]
fn virtual_deferral_accumulates_and_undoes() {
    let log = generate_run(&SimConfig::duplex(500, 92, 1)).unwrap();
    let limit = Some(DurationNs::from_ms(1));
    let us = SignedDurationNs::from_us;
    let twice = virtual_defer(&virtual_defer(&log, us(50), limit).unwrap(), us(50), limit).unwrap();
    assert_eq!(twice, virtual_defer(&log, us(100), limit).unwrap());
    let crossed = virtual_defer(&virtual_defer(&log, us(100), limit).unwrap(), us(-300), limit).unwrap();
    assert_eq!(crossed, virtual_defer(&log, us(-200), limit).unwrap());
    assert_eq!(virtual_defer(&twice, us(-100), limit).unwrap(), log);
    assert!(virtual_defer(&log, us(1_500), limit).is_err());
    assert!(virtual_defer(&log, us(1_500), None).is_ok());
}

#[test]
fn sweep_points_match_direct_reports() {
    let log = generate_run(&SimConfig::duplex(2_000, 93, 4)).unwrap();
    let grid: Vec<DaParams> = (0..=10).map(|k| DaParams::rda(DurationNs::from_us(100 * k))).collect();
    let reports = sweep(&log, &grid).unwrap();
    assert_eq!(reports[0], compute_report(&log, &grid[0]).unwrap());
    assert!(reports.windows(2).all(|w| w[1].link.e_bar <= w[0].link.e_bar));
    for r in &reports {
        assert!(r.link.z_bar <= r.link.e_bar);
        let sum_e: num_rational::Ratio<u64> = r.channels.iter().map(|c| c.e_bar.0).sum();
        let sum_z: num_rational::Ratio<u64> = r.channels.iter().map(|c| c.z_bar.0).sum();
        assert_eq!(sum_e, r.link.e_bar.0);
        assert_eq!(sum_z, r.link.z_bar.0);
        assert!(r.link.w_bar_pow.0 >= num_rational::Ratio::from_integer(2));
        let exact = r.link.w_bar_exact.unwrap().0;
        assert!(exact <= r.link.w_bar_pow.0 - r.link.e_bar.0);
    }
    let tdd = sweep(&log, &[DaParams::tdd(DurationNs::from_us(300), SignedDurationNs::ZERO)]).unwrap();
    assert_eq!(tdd[0].link, reports[3].link);
    assert!(sweep(&log, &[]).is_err());
}

#[test]
fn sweep_reports_failing_point() {
    let log = generate_run(&SimConfig::duplex(100, 94, 0)).unwrap();
    let grid = [DaParams::rda(DurationNs::ZERO), DaParams::tdd(DurationNs::ZERO, SignedDurationNs::from_us(5_000))];
    let err = sweep(&log, &grid).unwrap_err();
    assert!(err.to_string().starts_with("grid point 1"), "{err}");
}

#[test]
fn all_lost_and_pow_reports() {
    let mut cfg = SimConfig::duplex(200, 95, 0);
    for ch in &mut cfg.channels {
        ch.errors = prpwifi_core::sim::ErrorModel::iid(1.0);
    }
    let log = generate_run(&cfg).unwrap();
    let rep = compute_report(&log, &DaParams::rda(DurationNs::ZERO)).unwrap();
    assert_eq!(rep.link.e_bar.to_f64(), 0.0);
    assert_eq!(rep.link.theta_hat.to_f64(), 1.0);
    assert!(rep.link.latency.is_none());
    assert!(rep.link.quality.miss_10ms.is_none());
    assert_eq!(rep.link.quality.loss.to_f64(), 1.0);
    assert_eq!(rep.params.lost_copy_charge, 21);

    let log = generate_run(&SimConfig::duplex(500, 96, 4)).unwrap();
    let pow = compute_report(&log, &DaParams::pow()).unwrap();
    assert_eq!(pow.link.theta_hat.to_f64(), 1.0);
    assert_eq!(pow.link.theta_hat_link.to_f64(), 2.0);
    assert_eq!(pow.link.eta_check, pow.link.eta_pow);
    assert!(pow.link.w_bar_exact.is_none());
}

#[test]
fn reports_survive_a_codec_round_trip() {
    let mut cfg = SimConfig::duplex(1_000, 97, 2);
    cfg.emit_full_trace = false;
    let log = generate_run(&cfg).unwrap();
    let back = decode_log(encode_to_vec(&log).as_slice()).unwrap();
    let da = DaParams::tdd(DurationNs::from_us(100), SignedDurationNs::from_us(-100));
    assert_eq!(compute_report(&log, &da).unwrap(), compute_report(&back, &da).unwrap());
}
