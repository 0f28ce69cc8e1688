//! Hand-computed trade log and sign-flip properties of the backtest.

use chrono::NaiveDate;
use leadlag_core::backtest::{run_backtest, PortfolioEntry, TradeConfig, TradeRecord};
use leadlag_core::ts::{ComovementSign, PriceSeries};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn day(n: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(2024, 3, n).unwrap()
}

fn pair(sign: ComovementSign) -> PortfolioEntry {
    PortfolioEntry {
        leader_id: "LEAD".into(),
        follower_id: "FOLL".into(),
        sign,
    }
}

#[test]
fn two_trade_fixture_is_exact() {
    // Leader moves on day 2 (+10%) and day 5 (-20%); every other day is flat.
    let leader = PriceSeries::new("LEAD", (1..=8).map(day).collect(), vec![50.0, 55.0, 55.0, 55.0, 44.0, 44.0, 44.0, 44.0]).unwrap();
    // Follower has no day-4 observation, so indices skip it.
    let follower_days = [1, 2, 3, 5, 6, 7, 8].map(day).to_vec();
    let follower = PriceSeries::new("FOLL", follower_days, vec![30.0, 31.0, 40.0, 47.0, 45.0, 42.5, 41.0]).unwrap();
    let cfg = TradeConfig {
        hold_days: 2,
        ..TradeConfig::default()
    };
    let log = run_backtest(&[pair(ComovementSign::Negative)], &[leader, follower], (day(1), day(8)), &cfg, None).unwrap();

    // Aligned dates: 1 2 3 5 6 7 8. Signals on day 2 (r = +0.1) and day 5 (r = -0.2 vs day 3).
    // Trade 1: d = +1 * -1 = -1, entry day 3 @ 40, exit day 6 @ 45, pnl = -1 * 100 * 5 = -500.
    // Trade 2: d = -1 * -1 = +1, entry day 6 @ 45, exit day 8 @ 41, pnl = +1 * 100 * -4 = -400.
    let expected = vec![
        TradeRecord {
            leader_id: "LEAD".into(),
            follower_id: "FOLL".into(),
            signal_date: day(2),
            entry_date: day(3),
            exit_date: day(6),
            direction: ComovementSign::Negative,
            entry_price: 40.0,
            exit_price: 45.0,
            leader_move_pt: 5.0,
            leader_move_rel: 0.1,
            pnl: -500.0,
            same_event: false,
        },
        TradeRecord {
            leader_id: "LEAD".into(),
            follower_id: "FOLL".into(),
            signal_date: day(5),
            entry_date: day(6),
            exit_date: day(8),
            direction: ComovementSign::Positive,
            entry_price: 45.0,
            exit_price: 41.0,
            leader_move_pt: 11.0,
            leader_move_rel: 0.2,
            pnl: -400.0,
            same_event: false,
        },
    ];
    assert_eq!(log.trades, expected);
    assert!(log.skips.is_empty());
}

#[test]
fn entry_40_exit_47_books_700() {
    let leader = PriceSeries::new("LEAD", (1..=4).map(day).collect(), vec![50.0, 51.0, 51.0, 51.0]).unwrap();
    let follower = PriceSeries::new("FOLL", (1..=4).map(day).collect(), vec![35.0, 36.0, 40.0, 47.0]).unwrap();
    let cfg = TradeConfig {
        hold_days: 1,
        ..TradeConfig::default()
    };
    let prices = [leader, follower];
    let up = run_backtest(&[pair(ComovementSign::Positive)], &prices, (day(1), day(4)), &cfg, None).unwrap();
    assert_eq!(up.trades.len(), 1);
    assert_eq!(up.trades[0].pnl, 700.0);
    let down = run_backtest(&[pair(ComovementSign::Negative)], &prices, (day(1), day(4)), &cfg, None).unwrap();
    assert_eq!(down.trades[0].pnl, -700.0);
}

fn random_walk(rng: &mut ChaCha8Rng, id: &str, n: u32) -> PriceSeries {
    let mut p = rng.gen_range(20.0..80.0_f64);
    let prices = (0..n)
        .map(|_| {
            p = (p + rng.gen_range(-3.0..3.0_f64)).clamp(1.0, 99.0);
            (p * 100.0).round() / 100.0
        })
        .collect();
    PriceSeries::new(id, (1..=n).map(day).collect(), prices).unwrap()
}

#[test]
fn sign_flip_negates_every_trade() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..100 {
        let prices = [random_walk(&mut rng, "LEAD", 25), random_walk(&mut rng, "FOLL", 25)];
        let cfg = TradeConfig {
            theta: rng.gen_range(0.0..0.05),
            hold_days: rng.gen_range(1..6),
            ..TradeConfig::default()
        };
        let window = (day(1), day(25));
        let a = run_backtest(&[pair(ComovementSign::Positive)], &prices, window, &cfg, None).unwrap();
        let b = run_backtest(&[pair(ComovementSign::Negative)], &prices, window, &cfg, None).unwrap();
        assert_eq!(a.trades.len(), b.trades.len());
        for (x, y) in a.trades.iter().zip(&b.trades) {
            assert_eq!(x.pnl, -y.pnl);
            assert_eq!(x.direction, y.direction.flipped());
        }
        assert_eq!(a.total_pnl(), -b.total_pnl());

        let wins: f64 = a.trades.iter().filter(|t| t.pnl > 0.0).map(|t| t.pnl).sum();
        let losses: f64 = a.trades.iter().filter(|t| t.pnl < 0.0).map(|t| t.pnl).sum();
        assert!((a.total_pnl() - (wins + losses)).abs() < 1e-9);
        assert!(a.trades.iter().all(|t| t.signal_date >= window.0 && t.exit_date <= window.1));
    }
}

#[test]
fn trade_count_is_monotone_in_theta() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let prices = [random_walk(&mut rng, "LEAD", 30), random_walk(&mut rng, "FOLL", 30)];
    let mut last = usize::MAX;
    for theta in [0.0, 0.01, 0.02, 0.04, 0.08, 0.5] {
        let cfg = TradeConfig {
            theta,
            hold_days: 2,
            ..TradeConfig::default()
        };
        let log = run_backtest(&[pair(ComovementSign::Positive)], &prices, (day(1), day(30)), &cfg, None).unwrap();
        let n = log.trades.len() + log.skips.len();
        assert!(n <= last);
        last = n;
    }
}
