//! Status-map renderers.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::str::FromStr;

use dmfsense::{ChannelState, HexArray, StatusMap};

use crate::stream::StatusMapRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Ascii,
    Csv,
    Json,
    Svg,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ascii" => Ok(Format::Ascii),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(format!("unknown format `{other}` (ascii, csv, json, svg)")),
        }
    }
}

pub const CSV_HEADER: &str = "linear_index,q,r,zone,pin,M,state";

pub fn render(
    format: Format,
    array: &HexArray,
    maps: &[StatusMap],
    out: &mut dyn Write,
) -> io::Result<()> {
    match format {
        Format::Ascii => maps
            .iter()
            .try_for_each(|m| out.write_all(ascii(array, m).as_bytes())),
        Format::Csv => {
            for (i, m) in maps.iter().enumerate() {
                if i > 0 {
                    out.write_all(b"\n")?;
                }
                out.write_all(csv(array, m).as_bytes())?;
            }
            Ok(())
        }
        Format::Json => maps
            .iter()
            .try_for_each(|m| out.write_all(json_line(array, m).as_bytes())),
        Format::Svg => out.write_all(svg(array, maps).as_bytes()),
    }
}

/// One compact JSON document terminated by a newline.
pub fn json_line(array: &HexArray, map: &StatusMap) -> String {
    let mut s = serde_json::to_string(&StatusMapRecord::from_map(array, map))
        .expect("status map serializes");
    s.push('\n');
    s
}

/// Hex map with rows offset by half a cell per row of `r`.
pub fn ascii(array: &HexArray, map: &StatusMap) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "scan {} (tick {})  elapsed {:.3} ms  B={} .={} D={}",
        map.scan_index,
        map.tick,
        map.scan_elapsed * 1e3,
        map.count(ChannelState::BadConnection),
        map.count(ChannelState::ConnectedIdle),
        map.count(ChannelState::ConnectedDroplet),
    )
    .unwrap();
    let radius = array.side() as i32 - 1;
    for r in -radius..=radius {
        let row: Vec<String> = array
            .electrodes()
            .iter()
            .filter(|e| e.r == r)
            .map(|e| map.states[e.index].glyph().to_string())
            .collect();
        writeln!(
            s,
            "{}{}",
            " ".repeat(r.unsigned_abs() as usize),
            row.join(" ")
        )
        .unwrap();
    }
    s
}

pub fn csv(array: &HexArray, map: &StatusMap) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for e in array.electrodes() {
        let z = array.zone_of(e.index);
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            e.index, e.q, e.r, z.zone, z.pin, map.magnitudes[e.index], map.states[e.index]
        )
        .unwrap();
    }
    s
}

const HEX_SIZE: f64 = 10.0;
const PANELS_PER_ROW: usize = 4;

/// All scans as panels of one SVG document, coloured blue/white/red.
pub fn svg(array: &HexArray, maps: &[StatusMap]) -> String {
    let radius = array.side() as f64 - 1.0;
    let sqrt3 = 3f64.sqrt();
    let panel_w = sqrt3 * HEX_SIZE * (2.0 * radius + 1.0) + 2.0 * HEX_SIZE;
    let panel_h = 1.5 * HEX_SIZE * 2.0 * radius + 4.0 * HEX_SIZE + 16.0;
    let cols = maps.len().clamp(1, PANELS_PER_ROW);
    let rows = maps.len().div_ceil(PANELS_PER_ROW).max(1);
    let width = panel_w * cols as f64;
    let height = panel_h * rows as f64;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.2}" height="{height:.2}" viewBox="0 0 {width:.2} {height:.2}">"#
    )
    .unwrap();
    for (k, map) in maps.iter().enumerate() {
        let ox = panel_w * (k % PANELS_PER_ROW) as f64;
        let oy = panel_h * (k / PANELS_PER_ROW) as f64;
        let cx0 = ox + panel_w / 2.0;
        let cy0 = oy + 16.0 + panel_h / 2.0 - 8.0;
        writeln!(
            s,
            r#"  <g id="scan-{}" data-tick="{}">"#,
            map.scan_index, map.tick
        )
        .unwrap();
        writeln!(
            s,
            r#"    <text x="{:.2}" y="{:.2}" font-family="monospace" font-size="12">scan {} (tick {})</text>"#,
            ox + HEX_SIZE,
            oy + 14.0,
            map.scan_index,
            map.tick
        )
        .unwrap();
        for e in array.electrodes() {
            let cx = cx0 + sqrt3 * HEX_SIZE * (e.q as f64 + e.r as f64 / 2.0);
            let cy = cy0 + 1.5 * HEX_SIZE * e.r as f64;
            let points: Vec<String> = (0..6)
                .map(|i| {
                    let a = (60.0 * i as f64 + 30.0).to_radians();
                    format!(
                        "{:.2},{:.2}",
                        cx + HEX_SIZE * a.cos(),
                        cy + HEX_SIZE * a.sin()
                    )
                })
                .collect();
            let state = map.states[e.index];
            writeln!(
                s,
                r##"    <polygon data-index="{}" data-state="{}" points="{}" fill="{}" stroke="#444" stroke-width="0.8"/>"##,
                e.index,
                state,
                points.join(" "),
                state.color()
            )
            .unwrap();
        }
        s.push_str("  </g>\n");
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(array: &HexArray) -> StatusMap {
        let n = array.len();
        let mut states = vec![ChannelState::ConnectedIdle; n];
        states[0] = ChannelState::BadConnection;
        states[n / 2] = ChannelState::ConnectedDroplet;
        StatusMap {
            scan_index: 0,
            tick: 0,
            states,
            magnitudes: (0..n).map(|i| i as f64 * 10.5).collect(),
            channel_elapsed: vec![1.78e-3; n],
            scan_elapsed: 1.78e-3 * n as f64,
        }
    }

    #[test]
    fn renderers_agree() {
        let array = HexArray::new(8).unwrap();
        let map = sample(&array);

        let glyphs: Vec<char> = ascii(&array, &map)
            .lines()
            .skip(1)
            .flat_map(|l| {
                l.split_whitespace()
                    .map(|g| g.chars().next().unwrap())
                    .collect::<Vec<_>>()
            })
            .collect();
        let from_csv: Vec<String> = csv(&array, &map)
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().to_string())
            .collect();
        let fills: Vec<String> = svg(&array, std::slice::from_ref(&map))
            .lines()
            .filter(|l| l.contains("<polygon"))
            .map(|l| {
                l.split("fill=\"")
                    .nth(1)
                    .unwrap()
                    .split('"')
                    .next()
                    .unwrap()
                    .to_string()
            })
            .collect();

        assert_eq!(glyphs.len(), 169);
        assert_eq!(from_csv.len(), 169);
        assert_eq!(fills.len(), 169);
        for (i, s) in map.states.iter().enumerate() {
            assert_eq!(glyphs[i], s.glyph());
            assert_eq!(from_csv[i], s.as_str());
            assert_eq!(fills[i], s.color());
        }
    }

    #[test]
    fn csv_columns_are_fixed() {
        let array = HexArray::new(2).unwrap();
        let map = sample(&array);
        let text = csv(&array, &map);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("0,0,-1,A,0,0,bad_connection"));
    }

    #[test]
    fn ascii_shape() {
        let array = HexArray::new(2).unwrap();
        let map = sample(&array);
        let text = ascii(&array, &map);
        let rows: Vec<&str> = text.lines().skip(1).collect();
        assert_eq!(rows, vec![" B .", ". D .", " . ."]);
    }

    #[test]
    fn colours_follow_state() {
        assert_eq!(ChannelState::BadConnection.color(), "blue");
        assert_eq!(ChannelState::ConnectedIdle.color(), "white");
        assert_eq!(ChannelState::ConnectedDroplet.color(), "red");
    }
}
