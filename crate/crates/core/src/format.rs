//! Number formatting shared by the text outputs.

/// Formats `x` with `digits` significant digits, trailing zeros trimmed.
/// `None` gives the shortest representation that round-trips.
pub fn format_num(x: f64, digits: Option<usize>) -> String {
    let Some(d) = digits else {
        return format!("{x}");
    };
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let d = d.max(1);
    let mag = x.abs().log10().floor() as i32;
    if mag >= -5 && mag < d as i32 {
        let decimals = (d as i32 - 1 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        trim_zeros(&s)
    } else {
        let s = format!("{:.*e}", d - 1, x);
        match s.split_once('e') {
            Some((m, e)) => format!("{}e{e}", trim_zeros(m)),
            None => s,
        }
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}
