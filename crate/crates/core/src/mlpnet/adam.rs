use super::{Gradients, Layer, Mlp, MlpError, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment accumulators mirroring the model's parameter shapes.
#[derive(Clone, Debug)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    step: u64,
    first: Vec<Layer<T>>,
    second: Vec<Layer<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(model: &Mlp<T>, config: AdamConfig) -> Self {
        let zeros = Gradients::zeros_like(model).layers;
        Self {
            config,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update. Gradients containing NaN or infinity are
/// rejected without touching the model or the state.
pub fn adam_step<T: Scalar>(model: &mut Mlp<T>, grads: &Gradients<T>, state: &mut AdamState<T>) -> Result<()> {
    let layers = model.layers_mut();
    if grads.layers.len() != layers.len() || state.first.len() != layers.len() {
        return Err(MlpError::ShapeMismatch("gradient layer count".into()));
    }
    for (k, (l, g)) in layers.iter().zip(&grads.layers).enumerate() {
        if l.weights.dim() != g.weights.dim() || l.bias.dim() != g.bias.dim() {
            return Err(MlpError::ShapeMismatch(format!("gradient of layer {k}")));
        }
    }
    if !grads.is_finite() {
        return Err(MlpError::NonFinite("gradients"));
    }

    state.step += 1;
    let c = state.config;
    let t = state.step as i32;
    let cast = |v: f64| T::from(v).expect("float conversion");
    let (b1, b2) = (cast(c.beta1), cast(c.beta2));
    let (one_b1, one_b2) = (T::one() - b1, T::one() - b2);
    let corr1 = cast(1.0 - c.beta1.powi(t));
    let corr2 = cast(1.0 - c.beta2.powi(t));
    let (lr, eps) = (cast(c.lr), cast(c.eps));

    let update = |p: &mut T, g: T, m: &mut T, v: &mut T| {
        *m = b1 * *m + one_b1 * g;
        *v = b2 * *v + one_b2 * g * g;
        let m_hat = *m / corr1;
        let v_hat = *v / corr2;
        *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
    };

    for (k, layer) in layers.iter_mut().enumerate() {
        let g = &grads.layers[k];
        let (m, v) = (&mut state.first[k], &mut state.second[k]);
        ndarray::Zip::from(&mut layer.weights)
            .and(&g.weights)
            .and(&mut m.weights)
            .and(&mut v.weights)
            .for_each(|p, &g, m, v| update(p, g, m, v));
        ndarray::Zip::from(&mut layer.bias)
            .and(&g.bias)
            .and(&mut m.bias)
            .and(&mut v.bias)
            .for_each(|p, &g, m, v| update(p, g, m, v));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar_model(w: f64) -> Mlp<f64> {
        Mlp::from_layers(vec![Layer {
            weights: array![[w]],
            bias: array![0.0],
        }])
        .unwrap()
    }

    fn scalar_grad(gw: f64) -> Gradients<f64> {
        Gradients {
            layers: vec![Layer {
                weights: array![[gw]],
                bias: array![0.0],
            }],
        }
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut m = Mlp::<f32>::init(&[3, 4, 1], &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let before = m.clone();
        let mut st = AdamState::new(&m, AdamConfig::default());
        let zero = Gradients::zeros_like(&m);
        for _ in 0..5 {
            adam_step(&mut m, &zero, &mut st).unwrap();
        }
        assert_eq!(m, before);
        assert_eq!(st.step(), 5);
    }

    #[test]
    fn first_step_moves_by_lr_against_gradient() {
        // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
        for g in [3.0, -0.02] {
            let mut m = scalar_model(1.0);
            let mut st = AdamState::new(&m, AdamConfig::default());
            adam_step(&mut m, &scalar_grad(g), &mut st).unwrap();
            let moved = m.layers()[0].weights[[0, 0]] - 1.0;
            let expected = -1e-3 * g / (g.abs() + 1e-8);
            assert!((moved - expected).abs() < 1e-12);
            assert_eq!(moved.signum(), -g.signum());
        }
    }

    #[test]
    fn minimizes_a_parabola() {
        let mut m = scalar_model(0.0);
        let cfg = AdamConfig {
            lr: 0.1,
            ..AdamConfig::default()
        };
        let mut st = AdamState::new(&m, cfg);
        for _ in 0..100 {
            let w = m.layers()[0].weights[[0, 0]];
            adam_step(&mut m, &scalar_grad(2.0 * (w - 3.0)), &mut st).unwrap();
        }
        let w = m.layers()[0].weights[[0, 0]];
        assert!((w - 3.0).abs() < 0.5, "w = {w}");
    }

    #[test]
    fn non_finite_gradient_is_rejected() {
        let mut m = scalar_model(1.0);
        let mut st = AdamState::new(&m, AdamConfig::default());
        let err = adam_step(&mut m, &scalar_grad(f64::NAN), &mut st).unwrap_err();
        assert!(matches!(err, MlpError::NonFinite(_)));
        assert_eq!(st.step(), 0);
        assert_eq!(m, scalar_model(1.0));
    }
}
