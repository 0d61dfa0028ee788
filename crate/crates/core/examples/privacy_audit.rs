//! Instrumented run: the data host only ever sees well-formed ciphertexts,
//! and every CSP decryption equals a true value plus the recorded mask.

use ppkde::fixedpoint::{FixedPointConfig, FixedPointParams};
use ppkde::kde::{DataTuple, Dataset};
use ppkde::math::seeded_rng;
use ppkde::paillier::keygen;
use ppkde::protocol::{
    audit_csp_view, audit_host_view, encrypt_query, PlainTruth, ProtocolConfig, Session,
};
use rug::Integer;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = seeded_rng(8);
    let (pk, sk) = keygen(1024, &mut rng)?;
    let data = Dataset::from_tuples(
        2,
        2,
        vec![
            DataTuple::new(vec![0.2, 0.4], 0),
            DataTuple::new(vec![0.7, 0.1], 1),
            DataTuple::new(vec![0.9, 0.9], 1),
        ],
    )?;
    let mut fp = FixedPointConfig::defaults(2, 2, 8);
    fp.f = 160;
    fp.f_corr = 160;
    let params = FixedPointParams::new(fp.clone(), pk.n())?;
    let auditor = sk.clone();
    let mut session = Session::start(
        sk,
        params.clone(),
        ProtocolConfig::new(fp).options(),
        &mut rng,
    )?;
    session.outsource_all(&data)?;

    let q = [0.5, 0.5];
    let enc = encrypt_query(&q, &pk, &params, &mut rng)?;
    let (host, link) = session.host_and_link();
    let scores = host.encrypted_scores(link, &enc)?;
    let class = host.garbled_argmax(link, &scores)?;
    let record = host.mask_record().clone();
    let (mut csp, _, transcript) = session.finish()?;

    let qq: Vec<i64> = q
        .iter()
        .map(|x| params.quantize_feature(*x))
        .collect::<Result<_, _>>()?;
    let diffs = data
        .tuples()
        .iter()
        .map(|t| {
            qq.iter()
                .zip(&t.features)
                .map(|(a, b)| Ok(a - params.quantize_feature(*b)?))
                .collect::<Result<Vec<i64>, ppkde::fixedpoint::FixedPointError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let truth = PlainTruth {
        diffs,
        // True class sums, decrypted by the auditor from E(A_k).
        scores: record
            .scores
            .iter()
            .map(|c| auditor.decrypt(c))
            .collect::<Result<Vec<Integer>, _>>()?,
        query: enc,
    };
    let host_findings = audit_host_view(&transcript, &pk);
    let csp_findings = audit_csp_view(&csp.take_audit_log(), &record, &truth, &params, &pk);
    println!(
        "class {class}; data host findings: {host_findings:?}; csp findings: {csp_findings:?}"
    );
    Ok(())
}
