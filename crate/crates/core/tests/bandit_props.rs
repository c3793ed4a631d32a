use minivox_core::bandit::{argmax, select_arm, ucb_scores};
use minivox_core::{ArmState, Reward, UcbParams};
use nalgebra::DMatrix;
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum Op {
    Rewarded(Vec<f64>, f64),
    SelfSup(Vec<f64>, bool),
    Unlabeled(Vec<f64>),
}

fn vec_of(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, d)
}

fn op(d: usize) -> impl Strategy<Value = Op> {
    prop_oneof![
        (vec_of(d), prop_oneof![Just(0.0), Just(1.0), 0.0f64..=1.0]).prop_map(|(x, r)| Op::Rewarded(x, r)),
        (vec_of(d), any::<bool>()).prop_map(|(x, a)| Op::SelfSup(x, a)),
        vec_of(d).prop_map(Op::Unlabeled),
    ]
}

fn apply(arm: &mut ArmState, op: &Op) {
    match op {
        Op::Rewarded(x, r) => arm.update_rewarded(x, Reward::new(*r).unwrap()).unwrap(),
        Op::SelfSup(x, a) => arm.update_selfsup(x, *a).unwrap(),
        Op::Unlabeled(x) => arm.update_unlabeled(x).unwrap(),
    }
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

fn dense_inverse(a: &[f64], d: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(d, d, a).try_inverse().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    /// Pseudo-rewarded updates never touch A, covariance-only updates never
    /// touch b, whatever history preceded them.
    #[test]
    fn update_branches_touch_only_their_statistic(
        history in prop::collection::vec(op(4), 0..20),
        x in vec_of(4),
        agrees in any::<bool>(),
    ) {
        let mut arm = ArmState::new(4);
        for o in &history {
            apply(&mut arm, o);
        }

        let mut s = arm.clone();
        s.update_selfsup(&x, agrees).unwrap();
        prop_assert_eq!(bits(s.a()), bits(arm.a()));
        prop_assert_eq!(bits(s.a_inv()), bits(arm.a_inv()));

        let mut u = arm.clone();
        u.update_unlabeled(&x).unwrap();
        prop_assert_eq!(bits(u.b()), bits(arm.b()));
    }
}

proptest! {
    #[test]
    fn maintained_inverse_tracks_dense_inverse(
        ops in prop::collection::vec(op(5), 1..200),
    ) {
        let mut arm = ArmState::new(5);
        for o in &ops {
            apply(&mut arm, o);
        }
        let dense = dense_inverse(arm.a(), 5);
        let kept = DMatrix::from_row_slice(5, 5, arm.a_inv());
        let scale = dense.norm().max(1.0);
        prop_assert!((kept - &dense).norm() <= 1e-9 * scale);
        prop_assert!(arm.is_positive_definite());
    }

    #[test]
    fn appending_a_fresh_arm_keeps_a_clear_winner(
        thetas in prop::collection::vec(vec_of(3), 1..6),
        x in vec_of(3),
    ) {
        let mut arms: Vec<ArmState> = thetas
            .iter()
            .map(|t| {
                let mut a = ArmState::new(3);
                // one rewarded update along t gives a nonzero b
                a.update_rewarded(t, Reward::ONE).unwrap();
                a
            })
            .collect();
        let params = UcbParams::default();
        let before = ucb_scores(&arms, &x, params).unwrap();
        let best = select_arm(&arms, &x, params).unwrap();
        arms.push(ArmState::new(3));
        let fresh = ucb_scores(&arms[arms.len() - 1..], &x, params).unwrap()[0];
        let after = select_arm(&arms, &x, params).unwrap();
        if before[best] > fresh {
            prop_assert_eq!(after, best);
        } else if fresh > before[best] {
            prop_assert_eq!(after, arms.len() - 1);
        }
    }

    #[test]
    fn argmax_is_first_maximum(scores in prop::collection::vec(-2i32..3, 1..12)) {
        let f: Vec<f64> = scores.iter().map(|&s| f64::from(s)).collect();
        let max = scores.iter().max().unwrap();
        prop_assert_eq!(argmax(&f), scores.iter().position(|s| s == max));
    }
}

#[test]
fn repeated_rewards_on_one_direction() {
    // d = 1: after n rewarded updates with x = 1, r = 1, theta = n / (1 + n)
    let mut arm = ArmState::new(1);
    for n in 1..=50 {
        arm.update_rewarded(&[1.0], Reward::ONE).unwrap();
        let expected = n as f64 / (1.0 + n as f64);
        assert!((arm.theta()[0] - expected).abs() < 1e-12);
        assert!((arm.a_inv()[0] - 1.0 / (1.0 + n as f64)).abs() < 1e-12);
    }
}

#[test]
fn long_run_with_periodic_reinversion() {
    // crosses several re-inversion boundaries
    let mut arm = ArmState::new(6);
    let mut state = 0x2545f4914f6cdd1du64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    for _ in 0..3500 {
        let x: Vec<f64> = (0..6).map(|_| next()).collect();
        arm.update_unlabeled(&x).unwrap();
    }
    let dense = dense_inverse(arm.a(), 6);
    let kept = DMatrix::from_row_slice(6, 6, arm.a_inv());
    assert!((kept - dense).norm() < 1e-12);
}
