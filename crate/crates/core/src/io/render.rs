//! SVG allocation maps.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{CropCategory, Plan, PlanningInstance};

const CELL: i32 = 24;
const MARGIN: i32 = 16;
const LEGEND_WIDTH: i32 = 140;
const TITLE_HEIGHT: i32 = 28;

pub const FALLOW_COLOR: &str = "#e9e4d4";

pub fn category_color(category: CropCategory) -> &'static str {
    match category {
        CropCategory::Cereal => "#d9a421",
        CropCategory::Legume => "#2f8f4e",
        CropCategory::Vegetable => "#d2553a",
        CropCategory::Fungus => "#7a5230",
    }
}

/// Map of one period: every grid cell of every unit as one `rect` with
/// class `cell`, coloured by the category of the crop planted there.
pub fn render_svg(plan: &Plan, instance: &PlanningInstance, period: usize) -> Result<String> {
    if period >= instance.horizon || period >= plan.horizon() {
        return Err(Error::PeriodOutOfRange {
            period,
            horizon: instance.horizon,
        });
    }
    let cells = instance.units.iter().flat_map(|u| u.cells.iter());
    let (mut r0, mut r1, mut c0, mut c1) = (i32::MAX, i32::MIN, i32::MAX, i32::MIN);
    for &(r, c) in cells {
        r0 = r0.min(r);
        r1 = r1.max(r);
        c0 = c0.min(c);
        c1 = c1.max(c);
    }
    if r0 > r1 {
        (r0, r1, c0, c1) = (0, -1, 0, -1);
    }
    let grid_w = (c1 - c0 + 1) * CELL;
    let grid_h = (r1 - r0 + 1) * CELL;
    let legend_h = 5 * 20 + 8;
    let width = MARGIN * 3 + grid_w + LEGEND_WIDTH;
    let height = MARGIN * 2 + TITLE_HEIGHT + grid_h.max(legend_h);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(
        s,
        r##"<rect width="{width}" height="{height}" fill="#ffffff"/>"##
    );
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="{}" font-family="sans-serif" font-size="14">Period {period}</text>"#,
        MARGIN + 14
    );
    let top = MARGIN + TITLE_HEIGHT;
    for (i, unit) in instance.units.iter().enumerate() {
        let (fill, label) = match plan.get(i, period) {
            Some(c) => {
                let crop = &instance.crops[c];
                (category_color(crop.category), crop.id.as_str())
            }
            None => (FALLOW_COLOR, "fallow"),
        };
        for &(r, c) in &unit.cells {
            let x = MARGIN + (c - c0) * CELL;
            let y = top + (r - r0) * CELL;
            let _ = writeln!(
                s,
                r##"<rect class="cell" x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="#555555" stroke-width="0.5"><title>{}: {}</title></rect>"##,
                escape(&unit.id),
                escape(label)
            );
        }
    }
    let lx = MARGIN * 2 + grid_w;
    let entries = CropCategory::ALL
        .iter()
        .map(|c| (category_color(*c), c.as_str()))
        .chain(std::iter::once((FALLOW_COLOR, "fallow")));
    for (k, (fill, name)) in entries.enumerate() {
        let y = top + k as i32 * 20;
        let _ = writeln!(
            s,
            r##"<rect class="legend" x="{lx}" y="{y}" width="14" height="14" fill="{fill}" stroke="#555555" stroke-width="0.5"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{name}</text>"#,
            lx + 20,
            y + 11
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn render_map(
    plan: &Plan,
    instance: &PlanningInstance,
    period: usize,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let svg = render_svg(plan, instance, period)?;
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(ch),
        }
    }
    out
}
