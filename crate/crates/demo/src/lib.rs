//! Browser demo: three interactive views over `lattice-heat`, compiled to
//! WebAssembly with wasm-bindgen. The `*_view` functions are plain Rust and
//! carry all the logic; the exported wrappers only convert errors.

use lattice_heat::analysis::{dyadic_grid, kernel_decay, predicted_exponent};
use lattice_heat::kernel::{heat_kernel, KernelQuantity, LpExponent};
use lattice_heat::moments::{moment_polynomials, poly_real_roots, ROOT_DEGREE_MAX};
use lattice_heat::svg::{decay_plot, sequence_plot, Plot, Series};
use lattice_heat::DEFAULT_EPS;
use wasm_bindgen::prelude::*;

/// An SVG figure plus a one-paragraph text summary.
#[wasm_bindgen]
#[derive(Clone, Debug)]
pub struct View {
    svg: String,
    summary: String,
}

#[wasm_bindgen]
impl View {
    #[wasm_bindgen(getter)]
    pub fn svg(&self) -> String {
        self.svg.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn summary(&self) -> String {
        self.summary.clone()
    }
}

/// Largest time accepted by the kernel view; keeps the window small enough
/// to plot.
pub const KERNEL_T_MAX: f64 = 5000.0;

pub fn kernel_view(t: f64) -> Result<View, String> {
    if !(0.0..=KERNEL_T_MAX).contains(&t) {
        return Err(format!("t must lie in [0, {KERNEL_T_MAX}]"));
    }
    let k = heat_kernel(t, DEFAULT_EPS).map_err(|e| e.to_string())?;
    let seq = k.to_sequence().with_name("G(t, n)");
    let summary = format!(
        "t = {t}: window |n| <= {}, G(t,0) = {:.12}, mass = {:.15}, tail bound {:.1e}",
        k.window(),
        k.get(0),
        k.mass(),
        k.tail_mass()
    );
    Ok(View {
        svg: sequence_plot(format!("heat kernel at t = {t}"), &seq).render(),
        summary,
    })
}

pub fn decay_view(quantity: &str, p: &str, t_min: f64, t_max: f64) -> Result<View, String> {
    let quantity: KernelQuantity = quantity.parse()?;
    let p: LpExponent = p
        .parse()
        .map_err(|e: lattice_heat::kernel::KernelError| e.to_string())?;
    let grid = dyadic_grid(t_min, t_max).map_err(|e| e.to_string())?;
    let report = kernel_decay(p, quantity, &grid).map_err(|e| e.to_string())?;
    let order = match quantity {
        KernelQuantity::Value => 0,
        KernelQuantity::Gradient => 1,
        KernelQuantity::Laplacian => 2,
    };
    let summary = format!(
        "{}: fitted slope {:.4}, predicted {:.4}, max log residual {:.1e} over t in [{}, {}]",
        report.label,
        report.slope,
        predicted_exponent(p, order),
        report.max_residual,
        report.t_range.0,
        report.t_range.1
    );
    Ok(View {
        svg: decay_plot(&report).render(),
        summary,
    })
}

pub fn roots_view(kmax: usize) -> Result<View, String> {
    if !(2..=ROOT_DEGREE_MAX).contains(&kmax) {
        return Err(format!("kmax must lie in 2..={ROOT_DEGREE_MAX}"));
    }
    let polys = moment_polynomials(kmax).map_err(|e| e.to_string())?;
    let mut series = Vec::new();
    let mut lines = Vec::new();
    for (k, p) in polys.iter().enumerate().skip(2) {
        let roots = poly_real_roots(p, 1e-12).map_err(|e| e.to_string())?;
        let listed: Vec<String> = roots.iter().rev().map(|z| format!("{z:.6}")).collect();
        lines.push(format!("p_{k}(t) = {p}\n  zeros: {}", listed.join(", ")));
        series.push(Series::scatter(
            format!("k = {k}"),
            roots.iter().map(|&z| (z, k as f64)).collect(),
        ));
    }
    let plot = Plot {
        title: "zeros of the moment polynomials".into(),
        x_label: "zero".into(),
        y_label: "k".into(),
        series,
        ..Plot::default()
    };
    Ok(View {
        svg: plot.render(),
        summary: lines.join("\n"),
    })
}

/// Heat kernel profile at time `t`.
#[wasm_bindgen]
pub fn kernel(t: f64) -> Result<View, JsError> {
    kernel_view(t).map_err(|e| JsError::new(&e))
}

/// Log-log decay of a kernel norm over the dyadic grid `[t_min, t_max]`.
#[wasm_bindgen]
pub fn decay(quantity: &str, p: &str, t_min: f64, t_max: f64) -> Result<View, JsError> {
    decay_view(quantity, p, t_min, t_max).map_err(|e| JsError::new(&e))
}

/// Zeros of the moment polynomials up to degree `kmax`.
#[wasm_bindgen]
pub fn roots(kmax: usize) -> Result<View, JsError> {
    roots_view(kmax).map_err(|e| JsError::new(&e))
}
