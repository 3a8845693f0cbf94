use std::fmt::{Debug, Display};

use num_traits::Float;

/// Real number type used for parameters and activations.
///
/// Models run in `f32`; `f64` is available for numerical checks. Reductions
/// always accumulate in `f64` regardless of the storage type.
pub trait Scalar: Float + Debug + Display + Default + Send + Sync + 'static {
    /// Bytes per value in the checkpoint encoding.
    const BYTES: usize;
    /// Tag written into checkpoints.
    const DTYPE: u8;

    fn of(x: f64) -> Self;
    fn f64(self) -> f64;
    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;
}

impl Scalar for f32 {
    const BYTES: usize = 4;
    const DTYPE: u8 = 4;

    #[inline]
    fn of(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn f64(self) -> f64 {
        self as f64
    }
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_bits().to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f32::from_bits(u32::from_le_bytes(bytes[..4].try_into().unwrap()))
    }
}

impl Scalar for f64 {
    const BYTES: usize = 8;
    const DTYPE: u8 = 8;

    #[inline]
    fn of(x: f64) -> Self {
        x
    }
    #[inline]
    fn f64(self) -> f64 {
        self
    }
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_bits().to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f64::from_bits(u64::from_le_bytes(bytes[..8].try_into().unwrap()))
    }
}
