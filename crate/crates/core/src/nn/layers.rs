//! Layer math. Sequence activations are `[batch, time, channel]`, flat
//! activations `[batch, feature]`. Convolutions use "same" zero padding and
//! stride 1 and run as im2col followed by one matrix product.

use ndarray::{s, Array1, Array2, Array3, ArrayView2, Axis, Zip};
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Activation flowing between layers.
#[derive(Debug, Clone, PartialEq)]
pub enum Act {
    Seq(Array3<f64>),
    Flat(Array2<f64>),
}

impl Act {
    pub fn batch(&self) -> usize {
        match self {
            Act::Seq(a) => a.shape()[0],
            Act::Flat(a) => a.shape()[0],
        }
    }

    pub fn into_flat(self) -> Result<Array2<f64>> {
        match self {
            Act::Flat(a) => Ok(a),
            Act::Seq(a) => Err(Error::shape("flat activation", format!("{:?}", a.shape()))),
        }
    }

    fn seq(&self) -> Result<&Array3<f64>> {
        match self {
            Act::Seq(a) => Ok(a),
            Act::Flat(a) => Err(Error::shape("sequence activation", format!("{:?}", a.shape()))),
        }
    }

    fn flat(&self) -> Result<&Array2<f64>> {
        match self {
            Act::Flat(a) => Ok(a),
            Act::Seq(a) => Err(Error::shape("flat activation", format!("{:?}", a.shape()))),
        }
    }

    fn map_inplace(&mut self, f: impl FnMut(&mut f64)) {
        match self {
            Act::Seq(a) => a.map_inplace(f),
            Act::Flat(a) => a.map_inplace(f),
        }
    }

    fn zip_inplace(&mut self, other: &Act, f: impl Fn(&mut f64, f64)) {
        match (self, other) {
            (Act::Seq(a), Act::Seq(b)) => Zip::from(a).and(b).for_each(|x, &y| f(x, y)),
            (Act::Flat(a), Act::Flat(b)) => Zip::from(a).and(b).for_each(|x, &y| f(x, y)),
            _ => unreachable!("activation kinds diverged between forward and backward"),
        }
    }
}

/// Fully connected `y = x W + b`, `W: [in, out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Dense {
    pub fn he(inputs: usize, outputs: usize, rng: &mut Rng) -> Self {
        Self {
            w: he_normal((inputs, outputs), inputs, rng),
            b: Array1::zeros(outputs),
        }
    }

    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            w: Array2::zeros((inputs, outputs)),
            b: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.w.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.w.ncols()
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut y = x.dot(&self.w);
        y += &self.b;
        y
    }

    /// Returns `(dx, dW, db)`.
    pub fn backward(&self, x: ArrayView2<f64>, dy: ArrayView2<f64>) -> (Array2<f64>, Array2<f64>, Array1<f64>) {
        let dw = x.t().dot(&dy);
        let db = dy.sum_axis(Axis(0));
        let dx = dy.dot(&self.w.t());
        (dx, dw, db)
    }
}

/// 1-D convolution, weights laid out `[kernel * in_channels, out_channels]`
/// with row `k * in_channels + c` for tap `k` of input channel `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    pub kernel: usize,
    pub in_channels: usize,
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Conv1d {
    pub fn he(in_channels: usize, filters: usize, kernel: usize, rng: &mut Rng) -> Self {
        let fan_in = kernel * in_channels;
        Self {
            kernel,
            in_channels,
            w: he_normal((fan_in, filters), fan_in, rng),
            b: Array1::zeros(filters),
        }
    }

    pub fn filters(&self) -> usize {
        self.w.ncols()
    }

    fn pad_left(&self) -> usize {
        (self.kernel - 1) / 2
    }

    /// `[batch * time, kernel * in_channels]` patch matrix.
    fn im2col(&self, x: &Array3<f64>) -> Array2<f64> {
        let (b, t, c) = x.dim();
        let k = self.kernel;
        let pad = self.pad_left() as isize;
        let mut col = Array2::<f64>::zeros((b * t, k * c));
        for bi in 0..b {
            let xb = x.index_axis(Axis(0), bi);
            for ti in 0..t {
                let mut row = col.row_mut(bi * t + ti);
                for kk in 0..k {
                    let src = ti as isize + kk as isize - pad;
                    if src >= 0 && (src as usize) < t {
                        row.slice_mut(s![kk * c..(kk + 1) * c]).assign(&xb.row(src as usize));
                    }
                }
            }
        }
        col
    }

    fn col2im(&self, dcol: &Array2<f64>, shape: (usize, usize, usize)) -> Array3<f64> {
        let (b, t, c) = shape;
        let k = self.kernel;
        let pad = self.pad_left() as isize;
        let mut dx = Array3::<f64>::zeros(shape);
        for bi in 0..b {
            let mut dxb = dx.index_axis_mut(Axis(0), bi);
            for ti in 0..t {
                let row = dcol.row(bi * t + ti);
                for kk in 0..k {
                    let dst = ti as isize + kk as isize - pad;
                    if dst >= 0 && (dst as usize) < t {
                        let mut target = dxb.row_mut(dst as usize);
                        target += &row.slice(s![kk * c..(kk + 1) * c]);
                    }
                }
            }
        }
        dx
    }
}

fn he_normal<Sh: ndarray::ShapeBuilder<Dim = ndarray::Ix2>>(shape: Sh, fan_in: usize, rng: &mut Rng) -> Array2<f64> {
    let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("finite std");
    Array2::from_shape_simple_fn(shape, || normal.sample(rng))
}

/// One element of the trunk.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense(Dense),
    Conv1d(Conv1d),
    Relu,
    /// Non-overlapping max pooling; a short final window is kept
    /// (output length `ceil(time / size)`).
    MaxPool1d {
        size: usize,
    },
    GlobalAvgPool,
    Flatten,
    /// Inverted dropout, active only in training.
    Dropout {
        rate: f64,
    },
}

/// What a layer remembers from its forward pass.
#[derive(Debug, Clone)]
pub enum Cache {
    Dense {
        input: Array2<f64>,
    },
    Conv {
        col: Array2<f64>,
        shape: (usize, usize, usize),
    },
    Relu {
        output: Act,
    },
    MaxPool {
        argmax: Array3<usize>,
        shape: (usize, usize, usize),
    },
    GlobalAvgPool {
        time: usize,
    },
    Flatten {
        time: usize,
        channels: usize,
    },
    Dropout {
        mask: Option<Act>,
    },
}

impl Layer {
    /// Parameter arrays in a fixed order (weights then bias).
    pub fn params(&self) -> Vec<ndarray::ArrayViewD<'_, f64>> {
        match self {
            Layer::Dense(d) => vec![d.w.view().into_dyn(), d.b.view().into_dyn()],
            Layer::Conv1d(c) => vec![c.w.view().into_dyn(), c.b.view().into_dyn()],
            _ => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<ndarray::ArrayViewMutD<'_, f64>> {
        match self {
            Layer::Dense(d) => vec![d.w.view_mut().into_dyn(), d.b.view_mut().into_dyn()],
            Layer::Conv1d(c) => vec![c.w.view_mut().into_dyn(), c.b.view_mut().into_dyn()],
            _ => Vec::new(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Dense(_) => "dense",
            Layer::Conv1d(_) => "conv1d",
            Layer::Relu => "relu",
            Layer::MaxPool1d { .. } => "max_pool1d",
            Layer::GlobalAvgPool => "global_avg_pool",
            Layer::Flatten => "flatten",
            Layer::Dropout { .. } => "dropout",
        }
    }

    /// `dropout_rng` is only consulted when `train` is set.
    pub fn forward(&self, x: Act, train: bool, dropout_rng: &mut Rng) -> Result<(Act, Cache)> {
        match self {
            Layer::Dense(d) => {
                let x = x.flat()?;
                if x.ncols() != d.inputs() {
                    return Err(Error::shape(format!("{} dense inputs", d.inputs()), x.ncols()));
                }
                let y = d.forward(x.view());
                Ok((Act::Flat(y), Cache::Dense { input: x.clone() }))
            }
            Layer::Conv1d(c) => {
                let x = x.seq()?;
                let (b, t, ch) = x.dim();
                if ch != c.in_channels {
                    return Err(Error::shape(format!("{} conv channels", c.in_channels), ch));
                }
                let col = c.im2col(x);
                let mut y = col.dot(&c.w);
                y += &c.b;
                let y = y
                    .into_shape_with_order((b, t, c.filters()))
                    .expect("contiguous product");
                Ok((Act::Seq(y), Cache::Conv { col, shape: (b, t, ch) }))
            }
            Layer::Relu => {
                let mut y = x;
                y.map_inplace(|v| {
                    if *v < 0.0 {
                        *v = 0.0
                    }
                });
                Ok((y.clone(), Cache::Relu { output: y }))
            }
            Layer::MaxPool1d { size } => {
                let x = x.seq()?;
                let (b, t, c) = x.dim();
                let out_t = t.div_ceil(*size);
                let mut y = Array3::<f64>::zeros((b, out_t, c));
                let mut argmax = Array3::<usize>::zeros((b, out_t, c));
                for bi in 0..b {
                    for o in 0..out_t {
                        let lo = o * size;
                        let hi = (lo + size).min(t);
                        for ci in 0..c {
                            let mut best = lo;
                            for ti in lo + 1..hi {
                                if x[[bi, ti, ci]] > x[[bi, best, ci]] {
                                    best = ti;
                                }
                            }
                            y[[bi, o, ci]] = x[[bi, best, ci]];
                            argmax[[bi, o, ci]] = best;
                        }
                    }
                }
                Ok((
                    Act::Seq(y),
                    Cache::MaxPool {
                        argmax,
                        shape: (b, t, c),
                    },
                ))
            }
            Layer::GlobalAvgPool => {
                let x = x.seq()?;
                let t = x.shape()[1];
                let y = x.mean_axis(Axis(1)).expect("non-empty time axis");
                Ok((Act::Flat(y), Cache::GlobalAvgPool { time: t }))
            }
            Layer::Flatten => match x {
                Act::Seq(a) => {
                    let (b, t, c) = a.dim();
                    let y = if a.is_standard_layout() {
                        a.into_shape_with_order((b, t * c)).unwrap()
                    } else {
                        a.as_standard_layout()
                            .into_owned()
                            .into_shape_with_order((b, t * c))
                            .unwrap()
                    };
                    Ok((Act::Flat(y), Cache::Flatten { time: t, channels: c }))
                }
                Act::Flat(a) => {
                    let f = a.ncols();
                    Ok((Act::Flat(a), Cache::Flatten { time: 1, channels: f }))
                }
            },
            Layer::Dropout { rate } => {
                if !train || *rate <= 0.0 {
                    return Ok((x, Cache::Dropout { mask: None }));
                }
                let keep = 1.0 - rate;
                let mut mask = x.clone();
                mask.map_inplace(|m| {
                    *m = if dropout_rng.random::<f64>() < keep {
                        1.0 / keep
                    } else {
                        0.0
                    }
                });
                let mut y = x;
                y.zip_inplace(&mask, |v, m| *v *= m);
                Ok((y, Cache::Dropout { mask: Some(mask) }))
            }
        }
    }

    /// Returns the input gradient and the parameter gradients in
    /// [`Layer::params`] order.
    pub fn backward(&self, dy: Act, cache: &Cache) -> Result<(Act, Vec<ndarray::ArrayD<f64>>)> {
        match (self, cache) {
            (Layer::Dense(d), Cache::Dense { input }) => {
                let dy = dy.into_flat()?;
                let (dx, dw, db) = d.backward(input.view(), dy.view());
                Ok((Act::Flat(dx), vec![dw.into_dyn(), db.into_dyn()]))
            }
            (Layer::Conv1d(c), Cache::Conv { col, shape }) => {
                let dy = match dy {
                    Act::Seq(a) => a,
                    Act::Flat(a) => return Err(Error::shape("sequence gradient", format!("{:?}", a.shape()))),
                };
                let (b, t, _) = *shape;
                let dy2 = dy
                    .as_standard_layout()
                    .into_owned()
                    .into_shape_with_order((b * t, c.filters()))
                    .unwrap();
                let dw = col.t().dot(&dy2);
                let db = dy2.sum_axis(Axis(0));
                let dcol = dy2.dot(&c.w.t());
                let dx = c.col2im(&dcol, *shape);
                Ok((Act::Seq(dx), vec![dw.into_dyn(), db.into_dyn()]))
            }
            (Layer::Relu, Cache::Relu { output }) => {
                let mut dx = dy;
                dx.zip_inplace(output, |g, y| {
                    if y <= 0.0 {
                        *g = 0.0
                    }
                });
                Ok((dx, Vec::new()))
            }
            (Layer::MaxPool1d { .. }, Cache::MaxPool { argmax, shape }) => {
                let dy = match dy {
                    Act::Seq(a) => a,
                    Act::Flat(a) => return Err(Error::shape("sequence gradient", format!("{:?}", a.shape()))),
                };
                let mut dx = Array3::<f64>::zeros(*shape);
                for ((bi, o, ci), &src) in argmax.indexed_iter() {
                    dx[[bi, src, ci]] += dy[[bi, o, ci]];
                }
                Ok((Act::Seq(dx), Vec::new()))
            }
            (Layer::GlobalAvgPool, Cache::GlobalAvgPool { time }) => {
                let dy = dy.into_flat()?;
                let (b, c) = dy.dim();
                let scale = 1.0 / *time as f64;
                let dx = Array3::from_shape_fn((b, *time, c), |(bi, _, ci)| dy[[bi, ci]] * scale);
                Ok((Act::Seq(dx), Vec::new()))
            }
            (Layer::Flatten, Cache::Flatten { time, channels }) => {
                let dy = dy.into_flat()?;
                let b = dy.nrows();
                if *time == 1 && dy.ncols() == *channels {
                    return Ok((Act::Flat(dy), Vec::new()));
                }
                let dx = dy
                    .as_standard_layout()
                    .into_owned()
                    .into_shape_with_order((b, *time, *channels))
                    .unwrap();
                Ok((Act::Seq(dx), Vec::new()))
            }
            (Layer::Dropout { .. }, Cache::Dropout { mask }) => {
                let mut dx = dy;
                if let Some(m) = mask {
                    dx.zip_inplace(m, |g, m| *g *= m);
                }
                Ok((dx, Vec::new()))
            }
            (layer, _) => Err(Error::data(format!(
                "cache does not belong to a {} layer",
                layer.kind()
            ))),
        }
    }
}
