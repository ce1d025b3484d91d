//! Row-major 2-D buffer shared by the perceptual and neural code paths.

/// Rectangular grid of scalars, indexed `(row, col)` with row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane<T> {
    h: usize,
    w: usize,
    data: Vec<T>,
}

impl<T: Copy> Plane<T> {
    /// Plane of shape `h x w` with every cell set to `fill`.
    pub fn filled(h: usize, w: usize, fill: T) -> Self {
        Plane { h, w, data: vec![fill; h * w] }
    }

    /// Wraps an existing row-major buffer; `data.len()` must equal `h * w`.
    pub fn from_vec(h: usize, w: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), h * w, "plane buffer length mismatch");
        Plane { h, w, data }
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    #[inline]
    pub fn at(&self, y: usize, x: usize) -> T {
        self.data[y * self.w + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, v: T) {
        self.data[y * self.w + x] = v;
    }

    pub fn row(&self, y: usize) -> &[T] {
        &self.data[y * self.w..(y + 1) * self.w]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    /// Element-wise transform into a new plane of the same shape.
    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Plane<U> {
        Plane { h: self.h, w: self.w, data: self.data.iter().map(|&v| f(v)).collect() }
    }
}
