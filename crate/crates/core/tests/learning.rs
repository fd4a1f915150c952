mod support;

use marl_lob_core::book::{Price, Side, Trade};
use marl_lob_core::execution::*;
use rand::Rng;
use support::rng;

fn s(i: usize) -> DiscreteState {
    DiscreteState::from_index(i).unwrap()
}

/// Three-state chain: action 0 stays put (reward 0.1 in state 0, else 0),
/// action 1 moves right with probability 0.8 (reward 1 on reaching state 2,
/// which is terminal).
fn step(state: usize, action: usize, u: f64) -> (f64, Option<usize>) {
    match action {
        0 => (if state == 0 { 0.1 } else { 0.0 }, Some(state)),
        _ => {
            if u < 0.8 {
                let next = state + 1;
                if next == 2 {
                    (1.0, None)
                } else {
                    (0.0, Some(next))
                }
            } else {
                (0.0, Some(state))
            }
        }
    }
}

fn value_iteration(gamma: f64) -> [[f64; 2]; 2] {
    let mut q = [[0.0f64; 2]; 2];
    for _ in 0..10_000 {
        let v = |q: &[[f64; 2]; 2], s: usize| q[s][0].max(q[s][1]);
        let mut next = q;
        for st in 0..2 {
            next[st][0] = (if st == 0 { 0.1 } else { 0.0 }) + gamma * v(&q, st);
            let reach = if st == 1 { 1.0 } else { gamma * v(&q, 1) };
            next[st][1] = 0.8 * reach + 0.2 * gamma * v(&q, st);
        }
        q = next;
    }
    q
}

#[test]
fn q_learning_converges_to_value_iteration() {
    let gamma = 0.9;
    let exact = value_iteration(gamma);
    let mut q = QTable::new(2);
    let mut visits = [[0u64; 2]; 2];
    let mut r = rng(9);
    for _ in 0..20_000 {
        let mut state = 0usize;
        for _ in 0..50 {
            let action = r.random_range(0..2);
            let (reward, next) = step(state, action, r.random());
            visits[state][action] += 1;
            let lr = 1.0 / (visits[state][action] as f64).powf(0.7);
            q_update(&mut q, s(state), action, reward, next.map(s), lr, gamma);
            match next {
                Some(n) => state = n,
                None => break,
            }
        }
    }
    for st in 0..2 {
        for a in 0..2 {
            let got = q.get(s(st), a);
            assert!((got - exact[st][a]).abs() < 0.02, "Q({st},{a}) = {got}, exact {}", exact[st][a]);
        }
    }
    for st in 0..2 {
        let best = if exact[st][1] > exact[st][0] { 1 } else { 0 };
        assert_eq!(q.argmax(s(st)), best);
    }
}

#[test]
fn terminal_update_does_not_bootstrap() {
    let mut q = QTable::new(3);
    q.set(s(7), 2, 100.0);
    q_update(&mut q, s(3), 1, 0.5, None, 1.0, 1.0);
    assert_eq!(q.get(s(3), 1), 0.5);
    q_update(&mut q, s(3), 1, 0.5, Some(s(7)), 0.5, 1.0);
    assert_eq!(q.get(s(3), 1), 0.5 + 0.5 * (0.5 + 100.0 - 0.5));
}

#[test]
fn reward_is_zero_at_equal_vwaps_and_no_inventory() {
    let p = RewardParams::default();
    for side in [Side::Buy, Side::Sell] {
        assert_eq!(slippage(side, 101.5, 101.5), 0.0);
    }
    assert_eq!(penalty(0, 40, 0.7, &p), 0.0);
    let r = Reward {
        slippage: slippage(Side::Buy, 100.0, 100.0),
        penalty: penalty(0, 10, 0.3, &p),
    };
    assert_eq!(r.total(), 0.0);
}

#[test]
fn slippage_is_antisymmetric_between_sides() {
    let pairs = [(100.0, 101.0), (99.5, 98.0), (10_000.0, 10_003.0)];
    for (market, others) in pairs {
        let b = slippage(Side::Buy, market, others);
        let s = slippage(Side::Sell, market, others);
        assert_eq!(b, -s);
        assert_eq!(s, (market / others).ln());
    }
}

#[test]
fn penalty_strictly_increases_in_time_and_remaining_volume() {
    let p = RewardParams::default();
    let ts = [0.0, 0.1, 0.5, 0.9, 1.0];
    for w in ts.windows(2) {
        assert!(penalty(50, 10, w[1], &p) > penalty(50, 10, w[0], &p));
    }
    for x in 1..100u64 {
        assert!(penalty(x + 1, 10, 0.5, &p) > penalty(x, 10, 0.5, &p));
    }
    let expected = 50.0 / 10.0 * 0.01 * 0.5f64.exp();
    assert!((penalty(50, 10, 0.5, &p) - expected).abs() < 1e-15);
}

#[test]
fn tracker_matches_batch_vwap() {
    let mut r = rng(3);
    let trades: Vec<Trade> = (0..500)
        .map(|i| Trade {
            price: Price::new(r.random_range(95..105)).unwrap(),
            volume: r.random_range(1..50),
            aggressor_side: if r.random_bool(0.5) { Side::Buy } else { Side::Sell },
            aggressor_agent: r.random_range(0..5),
            passive_agent: r.random_range(0..5),
            passive_order: i,
            timestamp: i,
        })
        .collect();
    let mut tracker = VwapTracker::new(&[1, 3]);
    for t in &trades {
        tracker.record(t);
    }
    let p = RewardParams::default();
    for agent in [1, 3] {
        let batch = compute_reward(&trades, agent, Side::Sell, 20, 5, 0.4, &p).unwrap();
        let running = tracker.reward(agent, Side::Sell, 20, 5, 0.4, &p).unwrap();
        assert_eq!(batch, running);
    }
}

#[test]
fn epsilon_schedule_hits_its_floor_on_the_last_episode() {
    let e = EpsilonSchedule::spanning(100, 1.0, 0.05);
    assert_eq!(e.at(0), 1.0);
    assert!((e.at(99) - 0.05).abs() < 1e-12);
    assert_eq!(e.at(500), 0.05);
    assert!((1..100).all(|k| e.at(k) < e.at(k - 1)));
}
