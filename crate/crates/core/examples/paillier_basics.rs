//! Key generation, the two homomorphic identities and the wire encoding.

use ppkde::math::seeded_rng;
use ppkde::paillier::{keygen, Ciphertext, SecretKey};
use rug::Integer;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = seeded_rng(1);
    let (pk, sk) = keygen(2048, &mut rng)?;
    let a = pk.encrypt(&Integer::from(1234), &mut rng)?;
    let b = pk.encrypt(&Integer::from(5678), &mut rng)?;

    let sum = pk.hom_add(&a, &b)?;
    let scaled = pk.hom_scale(&a, &Integer::from(-3))?;
    println!("D(E(1234) * E(5678)) = {}", sk.decrypt(&sum)?);
    println!("D(E(1234)^-3)        = {}", sk.decrypt_signed(&scaled)?);

    let bytes = sum.to_bytes(&pk)?;
    let back = Ciphertext::from_bytes(&pk, &bytes)?;
    let sk2 = SecretKey::from_bytes(&sk.to_bytes())?;
    println!(
        "ciphertext {} bytes, round trip decrypts to {}",
        bytes.len(),
        sk2.decrypt(&back)?
    );
    Ok(())
}
