//! `start:stop:step` grids, inclusive of `stop` within `1e-12`.

pub fn parse(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format!("'{s}' is not a number in range '{text}'"))
    };
    match parts.as_slice() {
        [single] => Ok(vec![num(single)?]),
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(step > 0.0) || stop < start {
                return Err(format!("range '{text}' needs step > 0 and stop >= start"));
            }
            let slack = 1e-12 * (1.0 + stop.abs());
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            let values: Vec<f64> = (0..=count)
                .map(|i| start + i as f64 * step)
                .filter(|&v| v <= stop + slack)
                .collect();
            Ok(values)
        }
        _ => Err(format!("range '{text}' is not start:stop:step")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inclusive_endpoints() {
        let v = parse("0.1:2.0:0.1").unwrap();
        assert_eq!(v.len(), 20);
        assert_eq!(v[0], 0.1);
        assert!((v[19] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_and_degenerate() {
        assert_eq!(parse("1.5").unwrap(), vec![1.5]);
        assert_eq!(parse("1:1:1").unwrap(), vec![1.0]);
        assert!(parse("1:0:1").is_err());
        assert!(parse("1:2").is_err());
        assert!(parse("a:2:1").is_err());
    }
}
