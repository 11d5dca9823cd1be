use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lattice::{Point, Window};

/// One realization of the field on `Γ_{n+1}`, stored in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub d: usize,
    pub n: usize,
    pub seed: u64,
    pub model_fingerprint: String,
    pub values: Vec<f64>,
}

impl FieldSample {
    pub fn from_parts(d: usize, n: usize, seed: u64, model_fingerprint: String, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), (2 * n + 3).pow(d as u32), "sample covers the window with margin");
        FieldSample { d, n, seed, model_fingerprint, values }
    }

    /// Build a sample from explicit values on `Γ_{n+1}`.
    pub fn from_values(d: usize, n: usize, values: Vec<f64>) -> Self {
        Self::from_parts(d, n, 0, String::new(), values)
    }

    /// The sampled window `Γ_{n+1}`.
    pub fn window(&self) -> Window {
        Window::new(self.d, self.n + 1)
    }

    pub fn value(&self, t: &[i32]) -> Option<f64> {
        self.window().index(t).map(|i| self.values[i])
    }

    /// `{t ∈ Γ_n : X_t ≥ u}` in lexicographic order.
    pub fn excursion_vertices(&self, u: f64) -> Vec<Point> {
        let inner = Window::new(self.d, self.n);
        let outer = self.window();
        inner.points().filter(|p| self.values[outer.index(p).expect("inner window")] >= u).collect()
    }

    /// Indicator of `X_t ≥ u` over the whole sampled window.
    pub fn hot_mask(&self, u: f64) -> Vec<bool> {
        self.values.iter().map(|&x| x >= u).collect()
    }

    /// CSV with columns `t_1..t_d,value`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=self.d).map(|i| format!("t_{i}")).collect();
        header.push("value".into());
        out.write_record(&header)?;
        let window = self.window();
        for (i, v) in self.values.iter().enumerate() {
            let mut rec: Vec<String> = window.point(i).iter().map(|x| x.to_string()).collect();
            rec.push(format!("{v:?}"));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}
