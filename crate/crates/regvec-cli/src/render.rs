//! Minimal geometry exports: SVG for plane scenes, OBJ for space scenes.

use nalgebra::DVector;
use regvec::{Error, PLSet, Result};

pub fn render_svg(a: &PLSet, image: Option<&[(usize, DVector<f64>)]>) -> Result<String> {
    if a.ambient_dim() != 2 {
        return Err(Error::dim("SVG output requires a plane scene"));
    }
    let (lo, hi) = a
        .bounding_box()
        .ok_or_else(|| Error::degenerate("empty scene"))?;
    let pad = 0.15 * ((hi[0] - lo[0]).max(hi[1] - lo[1]).max(1.0));
    let (x0, y0, x1, y1) = (lo[0] - pad, lo[1] - pad, hi[0] + pad, hi[1] + pad);
    let scale = 640.0 / (x1 - x0).max(y1 - y0);
    let px = |x: f64| (x - x0) * scale;
    let py = |y: f64| (y1 - y) * scale; // SVG y grows downward
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.0} {:.0}\">\n",
        (x1 - x0) * scale,
        (y1 - y0) * scale,
        (x1 - x0) * scale,
        (y1 - y0) * scale
    ));
    for s in a.simplices() {
        match s.dim() {
            0 => {
                let v = &s.vertices()[0];
                out.push_str(&format!(
                    "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#1f4e79\"/>\n",
                    px(v[0]),
                    py(v[1])
                ));
            }
            1 => {
                let (p, q) = (&s.vertices()[0], &s.vertices()[1]);
                out.push_str(&format!(
                    "  <line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#1f4e79\" stroke-width=\"2\"/>\n",
                    px(p[0]), py(p[1]), px(q[0]), py(q[1])
                ));
            }
            _ => {}
        }
    }
    if let Some(cloud) = image {
        for (_, p) in cloud {
            out.push_str(&format!(
                "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"1.2\" fill=\"#c0392b\"/>\n",
                px(p[0]),
                py(p[1])
            ));
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn render_obj(a: &PLSet) -> Result<String> {
    if a.ambient_dim() != 3 {
        return Err(Error::dim("OBJ output requires a space scene"));
    }
    let mut out = String::from("# regvec scene export\n");
    let mut index = 1usize;
    for s in a.simplices() {
        let base = index;
        for v in s.vertices() {
            out.push_str(&format!("v {} {} {}\n", v[0], v[1], v[2]));
            index += 1;
        }
        match s.dim() {
            1 => out.push_str(&format!("l {} {}\n", base, base + 1)),
            2 => out.push_str(&format!("f {} {} {}\n", base, base + 1, base + 2)),
            _ => {}
        }
    }
    Ok(out)
}
