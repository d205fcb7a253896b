//! SVG chart of dev-accuracy training curves.

use std::path::Path;

use plotters::prelude::*;

use nateval_core::{Error, Result};

pub struct Series {
    pub name: String,
    pub points: Vec<(usize, f64)>,
}

const COLORS: [RGBColor; 6] = [BLUE, RED, BLACK, GREEN, MAGENTA, CYAN];

/// One line per run, epochs on x, dev accuracy on y.
pub fn render_curves(series: &[Series], path: &Path) -> Result<()> {
    // at least a two-epoch span so single-record curves still render
    let max_epoch = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .max()
        .unwrap_or(1)
        .max(2);

    let path_str = path.to_string_lossy().into_owned();
    let root = SVGBackend::new(&path_str, (900, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(chart_error)?;
    let mut chart = ChartBuilder::on(&root)
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(48)
        .build_cartesian_2d(1f64..max_epoch as f64, 0f64..1f64)
        .map_err(chart_error)?;
    chart
        .configure_mesh()
        .x_desc("epochs")
        .y_desc("accuracy")
        .draw()
        .map_err(chart_error)?;

    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        chart
            .draw_series(LineSeries::new(
                s.points.iter().map(|&(e, a)| (e as f64, a)),
                color.stroke_width(2),
            ))
            .map_err(chart_error)?
            .label(s.name.clone())
            .legend(move |(x, y)| {
                PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2))
            });
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.9))
        .border_style(BLACK)
        .position(SeriesLabelPosition::LowerRight)
        .draw()
        .map_err(chart_error)?;
    root.present().map_err(chart_error)?;
    Ok(())
}

fn chart_error<E: std::fmt::Display>(e: E) -> Error {
    Error::Io(std::io::Error::other(format!("chart rendering failed: {e}")))
}
