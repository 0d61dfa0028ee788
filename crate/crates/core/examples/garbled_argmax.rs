//! The masked argmax circuit: the generator holds masks, the evaluator holds
//! masked scores and fetches its input labels by oblivious transfer.

use ppkde::garble::{
    build_argmax_circuit, decode_index, encode_values, evaluate, garble, OtKind, OtReceiver,
    OtSender,
};
use ppkde::math::seeded_rng;
use rug::Integer;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = seeded_rng(3);
    let width = 16;
    let scores = [310u32, 925, 402];
    let masks = [1000u32, 20, 7777];
    let masked: Vec<Integer> = scores
        .iter()
        .zip(&masks)
        .map(|(s, m)| Integer::from(s + m))
        .collect();
    let mus: Vec<Integer> = masks.iter().map(|m| Integer::from(*m)).collect();

    let circuit = build_argmax_circuit(scores.len(), width);
    println!("{} gates, {} AND", circuit.gates.len(), circuit.and_count());
    let (gc, secrets) = garble(&circuit, &mut rng, true);
    let gen = secrets.generator_labels(&encode_values(&mus, width));

    let choices = encode_values(&masked, width);
    let (sender, setup) = OtSender::new(OtKind::ChouOrlandi, &mut rng);
    let (receiver, request) = OtReceiver::new(OtKind::ChouOrlandi, &setup, &choices, &mut rng)?;
    let pairs: Vec<(Vec<u8>, Vec<u8>)> = secrets
        .evaluator_inputs
        .iter()
        .map(|p| (p.zero.to_bytes().to_vec(), p.one.to_bytes().to_vec()))
        .collect();
    let labels = receiver.finish(&sender.respond(&request, &pairs)?)?;
    let eval: Vec<_> = labels
        .iter()
        .map(|b| ppkde::garble::WireLabel::from_bytes(b))
        .collect::<Result<_, _>>()?;

    let out = evaluate(&gc, &gen, &eval)?;
    println!(
        "argmax of {scores:?} = {}",
        decode_index(&secrets.decode(&out)?)
    );
    Ok(())
}
