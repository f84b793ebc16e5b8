//! Signal CSV: header `t_sec,<name0>,<name1>,...`, one row per sample.
//!
//! Values are written in shortest round-trip form, so reading back yields the
//! exact samples. The rate is recovered from the median timestamp spacing and
//! snapped to a micro-hertz grid.

use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::signal::Signal;

pub fn signal_to_csv_string<T: Real>(signal: &Signal<T>) -> String {
    let mut out = String::from("t_sec");
    for name in signal.resolved_names() {
        out.push(',');
        out.push_str(&name);
    }
    out.push('\n');
    let fps = signal.fps();
    for (i, row) in signal.samples().rows().into_iter().enumerate() {
        out.push_str(&format!("{}", i as f64 / fps));
        for v in row {
            out.push_str(&format!(",{}", v.as_f64()));
        }
        out.push('\n');
    }
    out
}

pub fn write_signal_csv<T: Real>(signal: &Signal<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, signal_to_csv_string(signal)).map_err(|e| Error::io(path, e))
}

pub fn read_signal_csv<T: Real>(path: impl AsRef<Path>) -> Result<Signal<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    signal_from_csv_str(&text)
}

pub fn signal_from_csv_str<T: Real>(text: &str) -> Result<Signal<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
    if headers.len() < 2 || &headers[0] != "t_sec" {
        return Err(Error::Csv("header must be `t_sec,<channel>,...`".into()));
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let width = names.len();

    let mut times = Vec::new();
    let mut values = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv(format!("row {}: {e}", line + 2)))?;
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Csv(format!("row {}: cannot parse `{s}`", line + 2)))
        };
        let t = parse(&record[0])?;
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(Error::Csv(format!("row {}: timestamps must increase", line + 2)));
            }
        }
        times.push(t);
        for field in record.iter().skip(1) {
            values.push(T::lit(parse(field)?));
        }
    }
    if times.len() < 2 {
        return Err(Error::Csv("need at least two rows to infer the sample rate".into()));
    }
    let mut gaps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(|a, b| a.total_cmp(b));
    let median = if gaps.len() % 2 == 1 {
        gaps[gaps.len() / 2]
    } else {
        0.5 * (gaps[gaps.len() / 2 - 1] + gaps[gaps.len() / 2])
    };
    let fps = ((1.0 / median) * 1e6).round() / 1e6;
    let samples = Array2::from_shape_vec((times.len(), width), values).expect("rows checked");
    Signal::new(samples, fps)?.with_names(names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn three_sample_signal_is_four_lines() {
        let s = Signal::from_vec(vec![0.1, -0.2, 0.3], 30.0).unwrap();
        let text = signal_to_csv_string(&s);
        assert_eq!(text.lines().count(), 4);
        let back: Signal<f64> = signal_from_csv_str(&text).unwrap();
        assert_eq!(back.fps(), 30.0);
        assert_eq!(back.channel(0).to_vec(), vec![0.1, -0.2, 0.3]);
    }

    #[test]
    fn non_monotone_time_rejected() {
        let text = "t_sec,g\n0,1\n0.1,2\n0.05,3\n";
        assert!(signal_from_csv_str::<f64>(text).is_err());
    }

    #[test]
    fn ragged_rows_rejected() {
        let text = "t_sec,a,b\n0,1,2\n0.1,2\n";
        assert!(signal_from_csv_str::<f64>(text).is_err());
    }

    #[test]
    fn names_preserved() {
        let s = Signal::new(array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]], 25.0)
            .unwrap()
            .with_names(["bvp", "resp"])
            .unwrap();
        let back: Signal<f64> = signal_from_csv_str(&signal_to_csv_string(&s)).unwrap();
        assert_eq!(back, s);
    }
}
