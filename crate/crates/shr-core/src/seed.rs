//! Deterministic seed derivation: every random stream in the pipeline is a
//! splitmix64 chain off one root seed and a tag path, so runs reproduce
//! bit-for-bit regardless of scheduling.

/// One splitmix64 step.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a tag path into the root seed.
pub fn derive(root: u64, tags: &[u64]) -> u64 {
    let mut state = splitmix64(root ^ 0x6A09_E667_F3BC_C909);
    for &tag in tags {
        state = splitmix64(state ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    }
    state
}
