//! Number rounding and rendering. JSON output carries 12 significant
//! digits; tables are rendered from that JSON at 6.

use serde_json::{Map, Value};

pub const JSON_DIGITS: usize = 12;
pub const TABLE_DIGITS: usize = 6;

pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    let r: f64 = format!("{:.*e}", digits - 1, x)
        .parse()
        .expect("formatted float");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Copy of `v` with every floating-point number rounded to 12 significant digits.
pub fn rounded(v: &Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64"), JSON_DIGITS);
            serde_json::Number::from_f64(x)
                .map(Value::Number)
                .unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.iter().map(rounded).collect()),
        Value::Object(o) => Value::Object(
            o.iter()
                .map(|(k, v)| (k.clone(), rounded(v)))
                .collect::<Map<_, _>>(),
        ),
        other => other.clone(),
    }
}

pub fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn num(x: f64) -> String {
    let r = round_sig(x, TABLE_DIGITS);
    if r != 0.0 && (r.abs() < 1e-4 || r.abs() >= 1e6) {
        format!("{:.*e}", TABLE_DIGITS - 1, r)
    } else {
        format!("{r}")
    }
}

/// Table cell for a JSON value.
pub fn cell(v: &Value) -> String {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => num(x),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        Value::Array(a) if a.len() == 2 && a.iter().all(Value::is_number) => {
            let re = a[0].as_f64().unwrap_or(0.0);
            let im = a[1].as_f64().unwrap_or(0.0);
            let sign = if im.is_sign_negative() && im != 0.0 {
                '-'
            } else {
                '+'
            };
            format!("{}{sign}{}i", num(re), num(im.abs()))
        }
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

fn grid(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| -> String {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:<w$}"))
            .collect();
        let mut s = parts.join("  ").trim_end().to_string();
        s.push('\n');
        s
    };
    let mut out = line(header);
    out.push_str(&line(
        &widths.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>(),
    ));
    for row in rows {
        out.push_str(&line(row));
    }
    out
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn rows_of(list: &Value, keys: &[&str]) -> Vec<Vec<String>> {
    list.as_array()
        .map(|a| {
            a.iter()
                .map(|item| keys.iter().map(|k| cell(&item[*k])).collect())
                .collect()
        })
        .unwrap_or_default()
}

fn histories_table(v: &Value) -> String {
    grid(
        &strings(&["history", "weight", "measure"]),
        &rows_of(&v["histories"], &["label", "weight", "measure"]),
    )
}

fn two_state_lines(ts: &Value) -> String {
    let part = |v: &Value| format!("t = {}: {}", cell(&v["t"]), state_text(&v["state"]));
    let mut out = format!(
        "two-state vectors, t' = {}, t'' = {}\n",
        cell(&ts["t_prime"]),
        cell(&ts["t_dprime"])
    );
    out.push_str(&format!(
        "  btfp     bra {}\n           ket {}\n",
        part(&ts["btfp"]["bra"]),
        part(&ts["btfp"]["ket"])
    ));
    out.push_str(&format!(
        "  crossing bra {}\n           ket {}\n",
        part(&ts["crossing"]["bra"]),
        part(&ts["crossing"]["ket"])
    ));
    for f in ts["fptb"].as_array().into_iter().flatten() {
        out.push_str(&format!(
            "  fptb[{}] bra {}\n           ket {}\n",
            cell(&f["outcome"]),
            part(&f["two_state"]["bra"]),
            part(&f["two_state"]["ket"])
        ));
    }
    out
}

fn state_text(v: &Value) -> String {
    let parts: Vec<String> = v.as_array().into_iter().flatten().map(cell).collect();
    format!("({})", parts.join(", "))
}

/// Human-readable rendering of a rounded result document.
pub fn result_table(doc: &Value) -> String {
    let r = &doc["results"];
    let mode = doc["mode"].as_str().unwrap_or("");
    let mut out = format!("scenario {} ({mode})\n\n", cell(&doc["name"]));
    match mode {
        "fpf_family" => out.push_str(&histories_table(r)),
        "abl" => {
            out.push_str(&format!("intermediate time t = {}\n", cell(&r["t"])));
            out.push_str(&grid(
                &strings(&["outcome", "probability"]),
                &rows_of(&r["outcomes"], &["label", "probability"]),
            ));
            if !r["two_state"].is_null() {
                out.push('\n');
                out.push_str(&two_state_lines(&r["two_state"]));
            }
        }
        "weak_value" => {
            out.push_str(&grid(
                &strings(&["t", "re", "im"]),
                &[vec![cell(&r["t"]), cell(&r["re"]), cell(&r["im"])]],
            ));
        }
        "ti_fixed" => {
            out.push_str(&format!("source {}\n", state_text(&r["source"])));
            out.push_str(&grid(
                &strings(&["absorber", "offer", "confirmation", "probability"]),
                &rows_of(
                    &r["transactions"],
                    &["absorber", "offer", "confirmation", "probability"],
                ),
            ));
        }
        "ti_contingent" => {
            out.push_str(&format!("source {}\n", state_text(&r["source"])));
            let recipe = rows_of(&r["recipe"], &["absorber", "probability"]);
            let forced = rows_of(&r["forced"], &["probability"]);
            let rows: Vec<Vec<String>> = recipe
                .into_iter()
                .zip(forced)
                .map(|(mut a, b)| {
                    a.extend(b);
                    a
                })
                .collect();
            out.push_str(&grid(&strings(&["absorber", "recipe", "forced"]), &rows));
            out.push_str(&format!(
                "contingency triggered: {}\n",
                cell(&r["triggered"])
            ));
            match r["discrepancy"].as_object() {
                Some(d) => out.push_str(&format!(
                    "INCONSISTENT: {} has recipe probability {} but detects with probability {}\n",
                    cell(&d["absorber"]),
                    cell(&d["recipe"]),
                    cell(&d["forced"])
                )),
                None => out.push_str("recipe consistent with the contingency\n"),
            }
            let f = &r["fpf"];
            out.push_str("\nfixed-point family\n");
            out.push_str(&histories_table(f));
            out.push_str(&grid(
                &strings(&["first detection", "probability"]),
                &rows_of(&f["first_detection"], &["absorber", "probability"]),
            ));
            out.push_str(&format!("undetected: {}\n", cell(&f["undetected"])));
            out.push_str(&format!(
                "family inconsistent: {}\n",
                cell(&f["inconsistent"])
            ));
        }
        _ => out.push_str(&json_text(r)),
    }
    let d = &doc["diagnostics"];
    out.push_str(&format!(
        "\nfamily size {}, consistent {}, normalization {}\n",
        cell(&d["family_size"]),
        cell(&d["consistency"]),
        cell(&d["normalization"])
    ));
    out
}

/// Column names and values summarizing one result document, for sweeps.
pub fn summary_columns(doc: &Value) -> (Vec<String>, Vec<Value>) {
    let r = &doc["results"];
    let labelled = |list: &Value, label: &str, value: &str, fmt: &dyn Fn(&str) -> String| {
        let mut names = Vec::new();
        let mut values = Vec::new();
        for item in list.as_array().into_iter().flatten() {
            names.push(fmt(item[label].as_str().unwrap_or("?")));
            values.push(item[value].clone());
        }
        (names, values)
    };
    match doc["mode"].as_str().unwrap_or("") {
        "fpf_family" => labelled(&r["histories"], "label", "measure", &|l| format!("m({l})")),
        "abl" => labelled(&r["outcomes"], "label", "probability", &|l| {
            format!("P({l})")
        }),
        "weak_value" => (
            strings(&["re", "im"]),
            vec![r["re"].clone(), r["im"].clone()],
        ),
        "ti_fixed" => labelled(&r["transactions"], "absorber", "probability", &|l| {
            format!("P({l})")
        }),
        "ti_contingent" => {
            let (mut names, mut values) = labelled(&r["recipe"], "absorber", "probability", &|l| {
                format!("recipe P({l})")
            });
            let (n2, v2) = labelled(
                &r["fpf"]["first_detection"],
                "absorber",
                "probability",
                &|l| format!("fpf P({l})"),
            );
            names.extend(n2);
            values.extend(v2);
            names.push("inconsistent".into());
            values.push(r["inconsistent"].clone());
            (names, values)
        }
        _ => (Vec::new(), Vec::new()),
    }
}

pub fn series_table(series: &Value) -> String {
    let header: Vec<String> = series["columns"]
        .as_array()
        .into_iter()
        .flatten()
        .map(|c| c.as_str().unwrap_or("").to_string())
        .collect();
    let rows: Vec<Vec<String>> = series["rows"]
        .as_array()
        .into_iter()
        .flatten()
        .map(|row| row.as_array().into_iter().flatten().map(cell).collect())
        .collect();
    grid(&header, &rows)
}
