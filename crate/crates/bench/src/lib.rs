//! Shared fixtures for the criterion benches.

/// Margins that span small to mid-sized state spaces.
pub const MARGINS: [(&str, &[u32], &[u32]); 4] = [
    ("3,2 x 2,2,1", &[3, 2], &[2, 2, 1]),
    ("4,3 x 3,2,2", &[4, 3], &[3, 2, 2]),
    ("3,3,2 x 3,3,2", &[3, 3, 2], &[3, 3, 2]),
    ("4,4,4 x 4,4,4", &[4, 4, 4], &[4, 4, 4]),
];

/// Margins whose state space still fits the dense eigensolver.
pub const SPECTRAL_MARGINS: [(&str, &[u32], &[u32]); 3] = [
    ("4,2 x 3,2,1", &[4, 2], &[3, 2, 1]),
    ("3,2,2 x 3,2,2", &[3, 2, 2], &[3, 2, 2]),
    ("3,3,1 x 2,2,2,1", &[3, 3, 1], &[2, 2, 2, 1]),
];

/// A large table for per-step sampling costs.
pub const LARGE_ROWS: [u32; 4] = [220, 215, 93, 64];
pub const LARGE_COLS: [u32; 4] = [108, 286, 71, 127];
