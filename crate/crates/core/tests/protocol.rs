use ppkde::fixedpoint::{FixedPointConfig, FixedPointParams};
use ppkde::kde::{kde_classify, DataTuple, Dataset};
use ppkde::math::seeded_rng;
use ppkde::paillier::{keygen, SecretKey};
use ppkde::protocol::{
    audit_host_view, run_session, Message, MessageKind, ProtocolConfig, Role, Session,
    SessionOptions, TransportKind,
};
use proptest::prelude::*;
use std::sync::OnceLock;

fn sk() -> &'static SecretKey {
    static KEY: OnceLock<SecretKey> = OnceLock::new();
    KEY.get_or_init(|| keygen(1024, &mut seeded_rng(77)).unwrap().1)
}

fn fixed_point(m: usize, c: usize) -> FixedPointConfig {
    FixedPointConfig {
        f: 160,
        f_corr: 160,
        ..FixedPointConfig::defaults(m, c, 32)
    }
}

fn config(m: usize, c: usize, seed: u64) -> ProtocolConfig {
    ProtocolConfig {
        key_bits: 1024,
        seed: Some(seed),
        ..ProtocolConfig::new(fixed_point(m, c))
    }
}

fn dataset(rows: &[(&[f64], usize)], c: usize) -> Dataset {
    let m = rows[0].0.len();
    Dataset::from_tuples(
        m,
        c,
        rows.iter()
            .map(|(f, l)| DataTuple::new(f.to_vec(), *l))
            .collect(),
    )
    .unwrap()
}

#[test]
fn single_tuple_store_returns_its_class() {
    let data = dataset(&[(&[0.3, 0.3], 1)], 2);
    let (class, _) = run_session(&config(2, 2, 1), sk(), &data, &[0.9, 0.1]).unwrap();
    assert_eq!(class, 1);
}

#[test]
fn equidistant_classes_tie_to_lowest_index() {
    let data = dataset(&[(&[0.2, 0.5], 1), (&[0.8, 0.5], 0)], 2);
    let (class, _) = run_session(&config(2, 2, 2), sk(), &data, &[0.5, 0.5]).unwrap();
    assert_eq!(class, 0);
}

#[test]
fn wide_kernel_follows_class_mass() {
    // The nearest tuple is class 0, but three class-1 tuples outweigh it.
    let data = dataset(
        &[
            (&[0.50, 0.50], 0),
            (&[0.60, 0.50], 1),
            (&[0.50, 0.62], 1),
            (&[0.40, 0.44], 1),
        ],
        2,
    );
    let q = [0.5, 0.5];
    let (class, _) = run_session(&config(2, 2, 3), sk(), &data, &q).unwrap();
    assert_eq!(class, kde_classify(&data, &q, 0.25).unwrap());
    assert_eq!(class, 1);
}

#[test]
fn transcript_has_expected_shape() {
    let data = dataset(&[(&[0.1], 0), (&[0.9], 1), (&[0.5], 2)], 3);
    let (_, t) = run_session(&config(1, 3, 4), sk(), &data, &[0.4]).unwrap();
    let kinds: Vec<MessageKind> = t
        .entries()
        .iter()
        .map(|e| {
            Message::decode(&e.payload, sk().public_key())
                .unwrap()
                .kind()
        })
        .collect();
    assert_eq!(
        kinds
            .iter()
            .filter(|k| **k == MessageKind::SubmitTuple)
            .count(),
        3
    );
    assert_eq!(
        kinds.iter().filter(|k| **k == MessageKind::Query).count(),
        1
    );
    assert_eq!(kinds.last(), Some(&MessageKind::Shutdown), "{kinds:?}");
    assert!(kinds.contains(&MessageKind::ClassResult));
    assert!(t.received_by(Role::Querier).count() == 1);
    assert!(audit_host_view(&t, sk().public_key()).is_empty());
}

#[test]
fn removed_owner_no_longer_counts() {
    let fp = fixed_point(1, 2);
    let params = FixedPointParams::new(fp, sk().public_key().n()).unwrap();
    let mut rng = seeded_rng(5);
    let mut s = Session::start(sk().clone(), params, SessionOptions::default(), &mut rng).unwrap();
    s.outsource(1, &DataTuple::new(vec![0.1], 0)).unwrap();
    s.outsource(2, &DataTuple::new(vec![0.45], 1)).unwrap();
    assert_eq!(s.query(&[0.4]).unwrap(), 1);
    assert_eq!(s.remove_owner(2), 1);
    assert_eq!(s.query(&[0.4]).unwrap(), 0);
    assert_eq!(s.remove_owner(2), 0);
    s.finish().unwrap();
}

#[test]
fn tcp_and_in_process_agree() {
    let data = dataset(&[(&[0.1, 0.9], 0), (&[0.7, 0.2], 1), (&[0.6, 0.3], 1)], 2);
    let mut tcp = config(2, 2, 6);
    tcp.transport = TransportKind::Tcp;
    let a = run_session(&config(2, 2, 6), sk(), &data, &[0.3, 0.6]).unwrap();
    let b = run_session(&tcp, sk(), &data, &[0.3, 0.6]).unwrap();
    assert_eq!(a, b);
}

#[test]
fn query_outside_unit_cube_is_rejected() {
    let data = dataset(&[(&[0.1], 0), (&[0.9], 1)], 2);
    assert!(run_session(&config(1, 2, 7), sk(), &data, &[1.5]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn matches_plaintext_kde(
        rows in prop::collection::vec((prop::collection::vec(0.0f64..=1.0, 2), 0usize..3), 1..6),
        q in prop::collection::vec(0.0f64..=1.0, 2),
        seed: u64,
    ) {
        let data = Dataset::from_tuples(2, 3, rows.into_iter().map(|(f, l)| DataTuple::new(f, l)).collect()).unwrap();
        let scores = ppkde::kde::kde_log_scores(&data, &q, 0.25).unwrap();
        let mut sorted = scores.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        // Near-ties may legitimately resolve either way after quantization.
        prop_assume!(sorted[1] == f64::NEG_INFINITY || sorted[0] - sorted[1] > 1e-9);
        let (class, _) = run_session(&config(2, 3, seed), sk(), &data, &q).unwrap();
        prop_assert_eq!(class, kde_classify(&data, &q, 0.25).unwrap());
    }
}
