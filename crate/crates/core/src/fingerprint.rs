//! Stable hashes of configurations and outputs.

use std::fmt::Debug;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::Result;

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of arbitrary bytes, hex encoded.
pub fn hash_bytes(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// SHA-256 of the `Debug` rendering of `value`; every parameter, including
/// floating-point values, enters through its exact shortest representation.
pub fn fingerprint<T: Debug + ?Sized>(value: &T) -> String {
    hash_bytes(format!("{value:?}").as_bytes())
}

/// SHA-256 of a file's contents.
pub fn hash_file(path: &Path) -> Result<String> {
    Ok(hash_bytes(&std::fs::read(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            hash_bytes(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn distinguishes_floats() {
        assert_ne!(fingerprint(&(0.1f64, 2u8)), fingerprint(&(0.1f64 + 1e-17 + 1e-16, 2u8)));
        assert_eq!(fingerprint(&[1.5f64, 2.0]), fingerprint(&[1.5f64, 2.0]));
    }
}
