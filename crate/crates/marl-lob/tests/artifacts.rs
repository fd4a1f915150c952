use marl_lob::artifacts::{events_csv, read_events, tradesigns, write_atomic};
use marl_lob_core::sim::{initial_learners, load_case, run_episode, EpisodeOptions, ExperimentConfig};
use marl_lob_core::stats::{impact_observations, tradesign_series};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn event_log_round_trips(seed in 0u64..10_000, case_id in prop::sample::select(vec![0u8, 3, 7, 11])) {
        let case = load_case(case_id).unwrap();
        let mut cfg = ExperimentConfig::default();
        cfg.env.session_events = 1500;
        cfg.execution.decision_points = 5;
        let mut learners = initial_learners(&case);
        let opts = EpisodeOptions { seed, episode: 0, epsilon: 0.5, id_order: None };
        let art = run_episode(&case, &cfg, 200_000.0, &opts, &mut learners).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.csv");
        write_atomic(&path, &events_csv(&art.events)).unwrap();
        let back = read_events(&path).unwrap();

        prop_assert_eq!(back.len(), art.events.len());
        for (a, b) in art.events.iter().zip(&back) {
            prop_assert_eq!((a.seq, a.kind, a.agent, a.side, a.price, a.volume), (b.seq, b.kind, b.agent, b.side, b.price, b.volume));
            prop_assert_eq!(&a.after, &b.after);
        }
        for w in back.windows(2) {
            prop_assert_eq!(&w[1].before, &w[0].after);
        }
        prop_assert_eq!(tradesigns(&back), tradesign_series(&art.trades));
        prop_assert_eq!(impact_observations(&back), impact_observations(&art.events));
        prop_assert_eq!(events_csv(&back), events_csv(&art.events));
    }
}
