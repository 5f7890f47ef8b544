use intcode::channel::AdversaryKind;
use intcode::harness::{run_trial, sweep, trial_seed, ExperimentConfig};
use intcode::protocol::ProtocolFamily;
use intcode::randex::ExchangeMode;
use intcode::schemes::{Scheme, SchemeConfig, SchemeParams};

fn params(scheme: Scheme, n: usize, eps: f64, mode: ExchangeMode) -> SchemeParams {
    SchemeParams::new(scheme, n, eps, mode, &SchemeConfig::default()).unwrap()
}

#[test]
fn large_alphabet_scheme_survives_mitm() {
    let mut config = ExperimentConfig::new(Scheme::A1, 1 << 12, vec![0.005], AdversaryKind::Mitm);
    config.trials = 200;
    config.seed = 17;
    config.traced_trials = 0;
    let report = sweep(&config).unwrap();
    let failures = report.trials.iter().filter(|t| !t.success).count();
    assert_eq!(failures, 0);
}

#[test]
fn mitm_desynchronises_transcript_lengths() {
    for scheme in [Scheme::A3, Scheme::A4] {
        let p = params(scheme, 1 << 12, 0.005, ExchangeMode::Repetition);
        let trials = 50;
        let diverged = (0..trials)
            .filter(|&t| {
                let res = run_trial(&p, ProtocolFamily::FullEntropy, AdversaryKind::Mitm, trial_seed(3, 0, t), false).unwrap();
                res.max_len_gap > 0
            })
            .count();
        assert!(diverged * 10 >= trials * 9, "{scheme}: {diverged}/{trials}");
    }
}

#[test]
fn bad_votes_come_from_corruptions_or_collisions() {
    for scheme in [Scheme::A3, Scheme::A4] {
        let p = params(scheme, 1 << 11, 0.004, ExchangeMode::Repetition);
        for t in 0..20 {
            let res = run_trial(&p, ProtocolFamily::FullEntropy, AdversaryKind::Mitm, trial_seed(8, 0, t), false).unwrap();
            let added: u64 = res.traces.iter().map(|it| it.bvc_added).sum();
            let collisions = res.collisions.h1 + res.collisions.h2;
            assert!(added <= res.corruptions + collisions, "{scheme} trial {t}: {added} > {} + {collisions}", res.corruptions);
            for it in &res.traces {
                if !it.had_error && !it.had_collision {
                    assert_eq!(it.bvc_added, 0, "{scheme} trial {t} iteration {}", it.iter);
                }
            }
        }
    }
}

#[test]
fn shared_randomness_consumed_in_lockstep() {
    for scheme in [Scheme::A3, Scheme::A4] {
        for mode in [ExchangeMode::Hidden, ExchangeMode::Repetition] {
            let p = params(scheme, 1 << 10, 0.004, mode);
            let expected = p.r_total * p.hash.shared_seed_len();
            for adversary in [AdversaryKind::None, AdversaryKind::Burst, AdversaryKind::Oblivious] {
                let res = run_trial(&p, ProtocolFamily::PointerJumping, adversary, 12, false).unwrap();
                assert!(res.exchange_agreed);
                assert_eq!(res.cursors, [expected, expected], "{scheme} {mode} {adversary}");
            }
        }
    }
}

#[test]
fn enough_potential_means_success() {
    for scheme in Scheme::ALL {
        let p = params(scheme, 1 << 10, 0.004, ExchangeMode::Repetition);
        let target = (p.n as f64 / p.r as f64).ceil();
        for adversary in AdversaryKind::ALL {
            for t in 0..4 {
                let res = run_trial(&p, ProtocolFamily::FullEntropy, adversary, trial_seed(21, 0, t), false).unwrap();
                if res.final_phi() >= target {
                    assert!(res.success, "{scheme} {adversary} trial {t}");
                }
            }
        }
    }
}

#[test]
fn seed_aware_attacker_breaks_single_layer_hashing() {
    // With the exchanged seed exposed, the attacker plants undetectable
    // errors against A3 but not against the two-layer hash of A4.
    let failures = |scheme| {
        let p = params(scheme, 1 << 11, 0.004, ExchangeMode::Repetition);
        (0..12)
            .filter(|&t| !run_trial(&p, ProtocolFamily::FullEntropy, AdversaryKind::Greedy, trial_seed(4, 0, t), false).unwrap().success)
            .count()
    };
    let (a3, a4) = (failures(Scheme::A3), failures(Scheme::A4));
    assert!(a3 >= 6, "A3 failed {a3}/12");
    assert!(a4 <= 1, "A4 failed {a4}/12");
}
