//! Image and stacked-tensor views of a record.
//!
//! Two consumers need a record reshaped rather than resampled:
//!
//! * [`render_plot`] draws the classic "strip chart" of all 12 leads into an
//!   RGB8 raster — one horizontal panel per lead in canonical order, white
//!   background, a 1-pixel black polyline per trace, each panel scaled to its
//!   own min/max with a configurable vertical margin. Rendering is a pure
//!   function of (record, config), so identical inputs produce byte-identical
//!   pixel buffers and PNG files.
//! * [`stack_signal`] replicates the `C x L` sample matrix three times along
//!   a leading channel axis, producing the `3 x C x L` tensor shape that
//!   image-pretrained encoders expect.
//!
//! Plots intentionally use *unnormalized* samples; per-panel scaling already
//! makes every trace fill its panel, and normalization elsewhere in the
//! pipeline is reserved for the symbolic and raw-signal paths.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{lead_code, lead_from_code};
use crate::record::{reorder_leads, EcgRecord, Lead};

const STACK_MAGIC: [u8; 4] = *b"ECGT";
const STACK_VERSION: u8 = 1;
const STACK_CHANNELS: usize = 3;

/// Plot geometry and styling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderConfig {
    /// Output width in pixels.
    pub width: usize,
    /// Output height in pixels; panels get `height / 12` rows each.
    pub height: usize,
    /// Fraction of each panel's height kept clear above and below the trace.
    pub margin: f64,
    /// Trace color as RGB.
    pub line_color: [u8; 3],
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            width: 1024,
            height: 768,
            margin: 0.05,
            line_color: [0, 0, 0],
        }
    }
}

/// An 8-bit RGB raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl RenderedImage {
    fn blank(width: usize, height: usize) -> Self {
        RenderedImage {
            width,
            height,
            pixels: vec![255; width * height * 3],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Raw RGB8 buffer of length `height * width * 3`.
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let at = (y * self.width + x) * 3;
        [self.pixels[at], self.pixels[at + 1], self.pixels[at + 2]]
    }

    fn put(&mut self, x: i64, y: i64, color: [u8; 3]) {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            return;
        }
        let at = (y as usize * self.width + x as usize) * 3;
        self.pixels[at..at + 3].copy_from_slice(&color);
    }

    /// Encode as PNG. The encoder is deterministic, so equal images yield
    /// equal files.
    pub fn write_png<W: Write>(&self, writer: W) -> Result<()> {
        use image::codecs::png::PngEncoder;
        use image::ImageEncoder;
        PngEncoder::new(writer)
            .write_image(
                &self.pixels,
                self.width as u32,
                self.height as u32,
                image::ExtendedColorType::Rgb8,
            )
            .map_err(|e| Error::Parse(format!("png encoding: {e}")))
    }

    pub fn to_png_bytes(&self) -> Result<Vec<u8>> {
        let mut bytes = Vec::new();
        self.write_png(&mut bytes)?;
        Ok(bytes)
    }
}

/// Bresenham segment, endpoints inclusive.
fn draw_line(img: &mut RenderedImage, from: (i64, i64), to: (i64, i64), color: [u8; 3]) {
    let (mut x0, mut y0) = from;
    let (x1, y1) = to;
    let dx = (x1 - x0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let dy = -(y1 - y0).abs();
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        img.put(x0, y0, color);
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

/// Draw all 12 leads as stacked horizontal panels.
///
/// The record must contain all 12 leads (any order; panels always appear in
/// canonical order). Each panel is scaled by its own lead's min/max; a
/// constant lead draws as a flat line across the panel's vertical center.
pub fn render_plot(record: &EcgRecord, config: &RenderConfig) -> Result<RenderedImage> {
    if config.width == 0 || config.height == 0 {
        return Err(Error::InvalidParameter(
            "render dimensions must be positive".into(),
        ));
    }
    if !(0.0..0.5).contains(&config.margin) {
        return Err(Error::InvalidParameter(format!(
            "margin {} outside [0, 0.5)",
            config.margin
        )));
    }
    let record = reorder_leads(record)?;
    let panels = record.num_leads();
    let panel_h = config.height / panels;
    if panel_h == 0 {
        return Err(Error::InvalidParameter(format!(
            "height {} leaves no room for {panels} panels",
            config.height
        )));
    }

    let mut img = RenderedImage::blank(config.width, config.height);
    let len = record.samples_per_lead();
    let w = config.width;
    for (panel, row) in record.rows().iter().enumerate() {
        let top = (panel * panel_h) as i64;
        let lo = row.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let to_y = |v: f64| -> i64 {
            // Normalized value 1 maps near the top of the panel.
            let norm = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
            let frac = config.margin + (1.0 - 2.0 * config.margin) * (1.0 - norm);
            top + (frac * (panel_h - 1) as f64).round() as i64
        };
        if hi == lo {
            // Flat trace across the whole panel at mid-height.
            let y = top + (0.5 * (panel_h - 1) as f64).round() as i64;
            draw_line(&mut img, (0, y), (w as i64 - 1, y), config.line_color);
            continue;
        }
        let to_x = |t: usize| -> i64 {
            ((t as f64) * (w - 1) as f64 / (len - 1) as f64).round() as i64
        };
        let mut prev = (to_x(0), to_y(row[0]));
        for (t, &v) in row.iter().enumerate().skip(1) {
            let next = (to_x(t), to_y(v));
            draw_line(&mut img, prev, next, config.line_color);
            prev = next;
        }
        if len == 1 {
            img.put(prev.0, prev.1, config.line_color);
        }
    }
    Ok(img)
}

/// A record's samples replicated three times along a channel axis.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedSignal {
    leads: Vec<Lead>,
    samples_per_lead: usize,
    fs: f64,
    /// Flattened `3 x C x L`, index `(k * C + c) * L + t`.
    data: Vec<f64>,
}

impl StackedSignal {
    pub fn channels(&self) -> usize {
        STACK_CHANNELS
    }

    pub fn num_leads(&self) -> usize {
        self.leads.len()
    }

    pub fn samples_per_lead(&self) -> usize {
        self.samples_per_lead
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn leads(&self) -> &[Lead] {
        &self.leads
    }

    pub fn get(&self, channel: usize, lead: usize, t: usize) -> f64 {
        self.data[(channel * self.leads.len() + lead) * self.samples_per_lead + t]
    }

    /// One channel's `C x L` slice.
    pub fn channel(&self, channel: usize) -> &[f64] {
        let span = self.leads.len() * self.samples_per_lead;
        &self.data[channel * span..(channel + 1) * span]
    }
}

/// Replicate the sample matrix into three identical channel slices.
pub fn stack_signal(record: &EcgRecord) -> StackedSignal {
    let span = record.num_leads() * record.samples_per_lead();
    let mut data = Vec::with_capacity(STACK_CHANNELS * span);
    for _ in 0..STACK_CHANNELS {
        for row in record.rows() {
            data.extend_from_slice(row);
        }
    }
    StackedSignal {
        leads: record.leads().to_vec(),
        samples_per_lead: record.samples_per_lead(),
        fs: record.fs(),
        data,
    }
}

/// Serialize a stacked tensor in the `ECGT` v1 layout: magic, version,
/// channel count, lead count (u16 LE), samples per lead (u32 LE), fs
/// (f32 LE), 4-byte lead-name codes, then `3*C*L` f32 LE samples.
pub fn write_stacked<W: Write>(stacked: &StackedSignal, mut writer: W) -> Result<()> {
    let samples = u32::try_from(stacked.samples_per_lead())
        .map_err(|_| Error::InvalidParameter("stacked tensor too long".into()))?;
    writer.write_all(&STACK_MAGIC)?;
    writer.write_all(&[STACK_VERSION, STACK_CHANNELS as u8])?;
    writer.write_all(&(stacked.num_leads() as u16).to_le_bytes())?;
    writer.write_all(&samples.to_le_bytes())?;
    writer.write_all(&(stacked.fs() as f32).to_le_bytes())?;
    for &lead in stacked.leads() {
        writer.write_all(&lead_code(lead))?;
    }
    let mut buf = Vec::with_capacity(stacked.data.len() * 4);
    for &v in &stacked.data {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    writer.write_all(&buf)?;
    Ok(())
}

/// Read a tensor written by [`write_stacked`].
pub fn read_stacked<R: Read>(mut reader: R) -> Result<StackedSignal> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() < 16 {
        return Err(Error::TruncatedPayload("stacked header incomplete".into()));
    }
    if bytes[0..4] != STACK_MAGIC {
        return Err(Error::MalformedHeader("bad stacked-tensor magic".into()));
    }
    if bytes[4] != STACK_VERSION {
        return Err(Error::MalformedHeader(format!(
            "unsupported stacked version {}",
            bytes[4]
        )));
    }
    if bytes[5] as usize != STACK_CHANNELS {
        return Err(Error::MalformedHeader(format!(
            "expected {STACK_CHANNELS} channels, found {}",
            bytes[5]
        )));
    }
    let lead_count = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    let samples = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let fs = f32::from_le_bytes(bytes[12..16].try_into().unwrap()) as f64;
    let header_len = 16 + 4 * lead_count;
    let payload = STACK_CHANNELS * lead_count * samples * 4;
    if bytes.len() < header_len + payload {
        return Err(Error::TruncatedPayload(format!(
            "expected {} bytes, found {}",
            header_len + payload,
            bytes.len()
        )));
    }
    if bytes.len() > header_len + payload {
        return Err(Error::MalformedHeader(
            "trailing bytes after stacked payload".into(),
        ));
    }
    let mut leads = Vec::with_capacity(lead_count);
    for i in 0..lead_count {
        let start = 16 + 4 * i;
        let code: [u8; 4] = bytes[start..start + 4].try_into().unwrap();
        leads.push(lead_from_code(&code)?);
    }
    let data: Vec<f64> = bytes[header_len..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    if fs <= 0.0 || !fs.is_finite() {
        return Err(Error::InvalidSampleRate(fs));
    }
    Ok(StackedSignal {
        leads,
        samples_per_lead: samples,
        fs,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::CANONICAL_LEADS;

    fn twelve_lead(fill: impl Fn(usize, usize) -> f64, len: usize) -> EcgRecord {
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|c| (0..len).map(|t| fill(c, t)).collect())
            .collect();
        EcgRecord::new(CANONICAL_LEADS.to_vec(), 250.0, rows).unwrap()
    }

    fn trace_pixels_in_panel(img: &RenderedImage, panel: usize, panel_h: usize) -> usize {
        let mut count = 0;
        for y in panel * panel_h..(panel + 1) * panel_h {
            for x in 0..img.width() {
                if img.pixel(x, y) != [255, 255, 255] {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn output_dimensions_match_config() {
        let rec = twelve_lead(|c, t| (c + t) as f64, 40);
        let cfg = RenderConfig {
            width: 300,
            height: 200,
            ..RenderConfig::default()
        };
        let img = render_plot(&rec, &cfg).unwrap();
        assert_eq!(img.width(), 300);
        assert_eq!(img.height(), 200);
        assert_eq!(img.pixels().len(), 300 * 200 * 3);
    }

    #[test]
    fn zero_record_draws_one_midline_row_per_panel() {
        let rec = twelve_lead(|_, _| 0.0, 100);
        let cfg = RenderConfig::default();
        let img = render_plot(&rec, &cfg).unwrap();
        let panel_h = cfg.height / 12;
        for panel in 0..12 {
            let mut dark_rows = Vec::new();
            for y in panel * panel_h..(panel + 1) * panel_h {
                if (0..img.width()).any(|x| img.pixel(x, y) != [255, 255, 255]) {
                    dark_rows.push(y);
                }
            }
            let mid = panel * panel_h + (0.5 * (panel_h - 1) as f64).round() as usize;
            assert_eq!(dark_rows, vec![mid], "panel {panel}");
            // The flat line spans the full width.
            assert!((0..img.width()).all(|x| img.pixel(x, mid) == [0, 0, 0]));
        }
    }

    #[test]
    fn rendering_is_deterministic_and_input_sensitive() {
        let rec_a = twelve_lead(|c, t| ((c + 1) as f64 * t as f64 * 0.01).sin(), 500);
        let rec_b = twelve_lead(|c, t| ((c + 1) as f64 * t as f64 * 0.013).sin(), 500);
        let cfg = RenderConfig::default();
        let img_1 = render_plot(&rec_a, &cfg).unwrap();
        let img_2 = render_plot(&rec_a, &cfg).unwrap();
        assert_eq!(img_1, img_2);
        assert_eq!(
            img_1.to_png_bytes().unwrap(),
            img_2.to_png_bytes().unwrap(),
            "png encoding must be deterministic"
        );
        let img_other = render_plot(&rec_b, &cfg).unwrap();
        assert_ne!(img_1, img_other);
    }

    #[test]
    fn every_panel_has_a_continuous_trace() {
        let rec = twelve_lead(|c, t| ((c + 1) as f64 * t as f64 * 0.02).sin(), 1250);
        let cfg = RenderConfig::default();
        let img = render_plot(&rec, &cfg).unwrap();
        let panel_h = cfg.height / 12;
        for panel in 0..12 {
            let count = trace_pixels_in_panel(&img, panel, panel_h);
            assert!(
                count >= cfg.width / 2,
                "panel {panel}: {count} trace pixels"
            );
        }
    }

    #[test]
    fn image_contains_only_background_and_trace_colors() {
        let rec = twelve_lead(|c, t| ((c + t) as f64 * 0.05).cos(), 400);
        let cfg = RenderConfig {
            line_color: [20, 40, 60],
            ..RenderConfig::default()
        };
        let img = render_plot(&rec, &cfg).unwrap();
        for y in 0..img.height() {
            for x in 0..img.width() {
                let px = img.pixel(x, y);
                assert!(
                    px == [255, 255, 255] || px == [20, 40, 60],
                    "unexpected color {px:?} at ({x}, {y})"
                );
            }
        }
    }

    #[test]
    fn panels_follow_canonical_order_even_for_shuffled_input() {
        // Make exactly one lead (V6) nonconstant, feed leads in reverse
        // order, and check the trace lands in the *last* panel.
        let mut rows: Vec<Vec<f64>> = vec![vec![0.0; 64]; 12];
        let mut leads = CANONICAL_LEADS.to_vec();
        leads.reverse();
        rows[0] = (0..64).map(|t| (t as f64 * 0.3).sin()).collect(); // V6 first
        let rec = EcgRecord::new(leads, 250.0, rows).unwrap();
        let cfg = RenderConfig::default();
        let img = render_plot(&rec, &cfg).unwrap();
        let panel_h = cfg.height / 12;
        let dark_rows = |panel: usize| -> usize {
            (panel * panel_h..(panel + 1) * panel_h)
                .filter(|&y| (0..img.width()).any(|x| img.pixel(x, y) != [255, 255, 255]))
                .count()
        };
        assert!(dark_rows(11) > 10, "V6 panel should hold the wavy trace");
        // A flat panel holds exactly one dark row spanning the full width.
        assert_eq!(dark_rows(0), 1);
        assert_eq!(trace_pixels_in_panel(&img, 0, panel_h), cfg.width);
    }

    #[test]
    fn rejects_records_without_all_leads_and_bad_configs() {
        let rec = EcgRecord::new(
            CANONICAL_LEADS[..2].to_vec(),
            250.0,
            vec![vec![0.0; 8], vec![1.0; 8]],
        )
        .unwrap();
        assert!(matches!(
            render_plot(&rec, &RenderConfig::default()),
            Err(Error::MissingLead(_))
        ));
        let full = twelve_lead(|_, t| t as f64, 8);
        let bad_margin = RenderConfig {
            margin: 0.5,
            ..RenderConfig::default()
        };
        assert!(render_plot(&full, &bad_margin).is_err());
        let too_short = RenderConfig {
            height: 11,
            ..RenderConfig::default()
        };
        assert!(render_plot(&full, &too_short).is_err());
    }

    #[test]
    fn stacked_channels_are_identical_copies() {
        let rec = twelve_lead(|c, t| (c * 100 + t) as f64 * 0.5, 30);
        let stacked = stack_signal(&rec);
        assert_eq!(stacked.channels(), 3);
        assert_eq!(stacked.num_leads(), 12);
        assert_eq!(stacked.samples_per_lead(), 30);
        let base = stacked.channel(0);
        assert_eq!(stacked.channel(1), base);
        assert_eq!(stacked.channel(2), base);
        // Channel 0 is the record itself, lead-major.
        for (c, row) in rec.rows().iter().enumerate() {
            for (t, &v) in row.iter().enumerate() {
                assert_eq!(stacked.get(0, c, t), v);
                assert_eq!(stacked.get(2, c, t), v);
            }
        }
    }

    #[test]
    fn stacked_zero_record_is_all_zero() {
        let rec = twelve_lead(|_, _| 0.0, 16);
        let stacked = stack_signal(&rec);
        assert!(stacked.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stacked_random_spot_checks() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let rec = twelve_lead(|c, t| ((c * 31 + t * 7) % 97) as f64 / 97.0, 200);
        let stacked = stack_signal(&rec);
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..1000 {
            let c = rng.gen_range(0..12);
            let t = rng.gen_range(0..200);
            let expect = rec.rows()[c][t];
            assert_eq!(stacked.get(0, c, t), expect);
            assert_eq!(stacked.get(1, c, t), expect);
            assert_eq!(stacked.get(2, c, t), expect);
        }
    }

    #[test]
    fn stacked_file_round_trip() {
        // Values that are exact in f32 survive the file's f32 payload.
        let rec = twelve_lead(|c, t| (c as f64) + (t as f64) * 0.25, 50);
        let stacked = stack_signal(&rec);
        let mut bytes = Vec::new();
        write_stacked(&stacked, &mut bytes).unwrap();
        let back = read_stacked(bytes.as_slice()).unwrap();
        assert_eq!(back, stacked);

        // Corrupt magic and truncation are rejected.
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            read_stacked(bad.as_slice()),
            Err(Error::MalformedHeader(_))
        ));
        let short = &bytes[..bytes.len() - 10];
        assert!(matches!(
            read_stacked(short),
            Err(Error::TruncatedPayload(_))
        ));
    }
}
