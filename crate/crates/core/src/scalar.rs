//! Scalar abstraction. Every numeric container in the crate is generic over
//! [`Real`]; the physics layer works in `f64` and converts on entry.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; used for physical parameters.
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite f64 converts")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("real converts to f64")
    }

    /// `c = a · b` for row-major `a` (m×k), `b` (k×n), `c` (m×n).
    fn gemm(m: usize, k: usize, n: usize, a: &[C<Self>], b: &[C<Self>], c: &mut [C<Self>]);
}

macro_rules! impl_real {
    ($t:ty, $f:path) => {
        impl Real for $t {
            fn gemm(m: usize, k: usize, n: usize, a: &[C<Self>], b: &[C<Self>], c: &mut [C<Self>]) {
                assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
                if m == 0 || n == 0 {
                    return;
                }
                use matrixmultiply::CGemmOption::Standard;
                // SAFETY: Complex<T> is repr(C) with layout [re, im]; bounds checked above
                unsafe {
                    $f(
                        Standard,
                        Standard,
                        m,
                        k,
                        n,
                        [1.0, 0.0],
                        a.as_ptr() as *const [$t; 2],
                        k as isize,
                        1,
                        b.as_ptr() as *const [$t; 2],
                        n as isize,
                        1,
                        [0.0, 0.0],
                        c.as_mut_ptr() as *mut [$t; 2],
                        n as isize,
                        1,
                    );
                }
            }
        }
    };
}

impl_real!(f32, matrixmultiply::cgemm);
impl_real!(f64, matrixmultiply::zgemm);

pub type C<R> = Complex<R>;

#[inline]
pub fn c<R: Real>(re: f64, im: f64) -> C<R> {
    Complex::new(R::of(re), R::of(im))
}

#[inline]
pub fn zero<R: Real>() -> C<R> {
    Complex::new(R::zero(), R::zero())
}

#[inline]
pub fn one<R: Real>() -> C<R> {
    Complex::new(R::one(), R::zero())
}

#[inline]
pub fn re<R: Real>(x: R) -> C<R> {
    Complex::new(x, R::zero())
}
