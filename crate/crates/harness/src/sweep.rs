//! Cartesian parameter sweeps over a base experiment.

use std::path::Path;

use rayon::prelude::*;
use serde_json::{Map, Value};

use crate::config::Config;
use crate::error::{HarnessError, Result};
use crate::experiments::run_experiment;
use crate::report::ReportRow;

/// Sets `path` (dot separated; numeric segments index arrays) inside `root`,
/// creating intermediate objects as needed.
pub fn set_path(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut cur = root;
    let segments: Vec<&str> = path.split('.').collect();
    for (depth, seg) in segments.iter().enumerate() {
        let last = depth + 1 == segments.len();
        cur = match cur {
            Value::Array(items) => {
                let idx: usize = seg
                    .parse()
                    .map_err(|_| HarnessError::config(format!("sweep path `{path}`: `{seg}` is not an index")))?;
                let len = items.len();
                items.get_mut(idx).ok_or_else(|| {
                    HarnessError::config(format!("sweep path `{path}`: index {idx} out of range (len {len})"))
                })?
            }
            Value::Object(map) => map.entry(seg.to_string()).or_insert_with(|| Value::Object(Map::new())),
            _ => return Err(HarnessError::config(format!("sweep path `{path}`: `{seg}` is not inside an object"))),
        };
        if last {
            *cur = value;
            return Ok(());
        }
    }
    Err(HarnessError::config("sweep path is empty"))
}

/// One grid point: the overrides applied, in axis order.
pub type GridPoint = Vec<(String, Value)>;

/// Every grid point in order, first axis outermost.
pub fn grid_points(axes: &[(String, Vec<Value>)]) -> Vec<Vec<(String, Value)>> {
    let mut points = vec![Vec::new()];
    for (param, values) in axes {
        points = points
            .into_iter()
            .flat_map(|prefix: Vec<(String, Value)>| {
                values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push((param.clone(), v.clone()));
                    p
                })
            })
            .collect();
    }
    points
}

/// The fully specified config of each grid point. `cfg` should be unresolved
/// so derived defaults are recomputed per point.
pub fn expand(cfg: &Config, source: &Path) -> Result<Vec<(GridPoint, Config)>> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| HarnessError::config("missing key `sweep`"))?;
    let mut base = cfg.clone();
    base.experiment = sweep.base;
    base.sweep = None;
    let base_value = serde_json::to_value(&base).expect("config serializes");
    let axes: Vec<(String, Vec<Value>)> = sweep.grid.iter().map(|a| (a.param.clone(), a.values.clone())).collect();
    grid_points(&axes)
        .into_iter()
        .map(|point| {
            let mut value = base_value.clone();
            for (param, v) in &point {
                set_path(&mut value, param, v.clone())?;
            }
            let mut point_cfg = Config::from_value(value).map_err(|e| match e {
                HarnessError::Config(msg) => HarnessError::Config(format!("sweep point {}: {msg}", describe(&point))),
                other => other,
            })?;
            point_cfg.output = cfg.output.clone();
            // Derived defaults (e.g. port width from fanout) follow the overrides.
            point_cfg.resolve(source);
            Ok((point, point_cfg))
        })
        .collect()
}

fn describe(point: &[(String, Value)]) -> String {
    point.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(",")
}

/// Runs every point in parallel; rows keep grid order.
pub fn run_sweep(cfg: &Config, source: &Path) -> Result<(Vec<ReportRow>, Value)> {
    let points = expand(cfg, source)?;
    let results: Vec<Result<Vec<ReportRow>>> = points.par_iter().map(|(_, c)| run_experiment(c)).collect();
    let mut rows = Vec::new();
    for (idx, res) in results.into_iter().enumerate() {
        for mut row in res? {
            row.point = idx;
            rows.push(row);
        }
    }
    let listing = Value::Array(
        points
            .iter()
            .enumerate()
            .map(|(idx, (point, _))| {
                let mut m = Map::new();
                m.insert("point".into(), Value::from(idx));
                for (k, v) in point {
                    m.insert(k.clone(), v.clone());
                }
                Value::Object(m)
            })
            .collect(),
    );
    Ok((rows, listing))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn set_path_creates_and_indexes() {
        let mut v = json!({"architectures": [{"kind": "systolic", "rows": 2}]});
        set_path(&mut v, "architectures.0.rows", json!(8)).unwrap();
        set_path(&mut v, "workload.shape.k", json!(3)).unwrap();
        assert_eq!(v, json!({"architectures": [{"kind": "systolic", "rows": 8}], "workload": {"shape": {"k": 3}}}));
        assert!(set_path(&mut v, "architectures.5.rows", json!(1)).is_err());
        assert!(set_path(&mut v, "architectures.0.rows.x", json!(1)).is_err());
    }

    #[test]
    fn first_axis_is_outermost() {
        let axes = vec![("a".to_string(), vec![json!(1), json!(2)]), ("b".to_string(), vec![json!("x"), json!("y")])];
        let pts: Vec<String> = grid_points(&axes).iter().map(|p| describe(p)).collect();
        assert_eq!(pts, ["a=1,b=\"x\"", "a=1,b=\"y\"", "a=2,b=\"x\"", "a=2,b=\"y\""]);
    }

    #[test]
    fn darksilicon_sweep() {
        let cfg = Config::from_json_str(
            r#"{"schema_version":1,"experiment":"sweep","darksilicon":{"generation":0},
                "sweep":{"base":"darksilicon","grid":[{"param":"darksilicon.generation","values":[0,1,2,3]}]}}"#,
        )
        .unwrap();
        let (rows, listing) = run_sweep(&cfg, Path::new("s.json")).unwrap();
        let eff: Vec<f64> = rows.iter().map(|r| r.effective_multiplier.unwrap()).collect();
        assert_eq!(eff, [1.0, 2.0, 2.0, 2.0]);
        assert_eq!(rows.iter().map(|r| r.point).collect::<Vec<_>>(), [0, 1, 2, 3]);
        assert_eq!(listing.as_array().unwrap().len(), 4);
    }

    #[test]
    fn bad_point_names_the_point() {
        let cfg = Config::from_json_str(
            r#"{"schema_version":1,"experiment":"sweep","darksilicon":{"generation":0},
                "sweep":{"base":"darksilicon","grid":[{"param":"darksilicon.generation","values":["x"]}]}}"#,
        )
        .unwrap();
        let err = run_sweep(&cfg, Path::new("s.json")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("darksilicon.generation"), "{err}");
    }
}
