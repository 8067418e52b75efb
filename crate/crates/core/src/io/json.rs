//! Motor plans and trajectories as JSON with 17 significant digits.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::slm::{MotorPlan, Trajectory, Vec3, VirtualTarget};

/// Pretty printing with every float written as `d.dddddddddddddddde±x`.
struct Exact<'a>(PrettyFormatter<'a>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for Exact<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }
}

fn to_string<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Exact(PrettyFormatter::with_indent(b" ")));
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Parse(format!("serialization failed: {e}")))?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

pub fn serialize_plan(plan: &MotorPlan) -> Result<String> {
    plan.validate()?;
    to_string(plan)
}

pub fn serialize_trajectory(traj: &Trajectory) -> Result<String> {
    traj.validate()?;
    to_string(traj)
}

fn parse_root(text: &str) -> Result<Map<String, Value>> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(format!("invalid JSON: {e}")))?;
    match v {
        Value::Object(m) => Ok(m),
        _ => Err(Error::schema("", "document must be an object")),
    }
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::schema(join(path, key), "missing field"))
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn num(v: &Value, path: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| Error::schema(path, "expected a number"))
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| Error::schema(path, "expected an array"))
}

fn vec3(v: &Value, path: &str) -> Result<Vec3> {
    let a = array(v, path)?;
    if a.len() != 3 {
        return Err(Error::schema(path, format!("expected 3 numbers, got {}", a.len())));
    }
    Ok([
        num(&a[0], &format!("{path}[0]"))?,
        num(&a[1], &format!("{path}[1]"))?,
        num(&a[2], &format!("{path}[2]"))?,
    ])
}

pub fn parse_plan(text: &str) -> Result<MotorPlan> {
    let root = parse_root(text)?;
    let p0 = vec3(field(&root, "p0", "")?, "p0")?;
    let list = array(field(&root, "strokes", "")?, "strokes")?;
    if list.is_empty() {
        return Err(Error::schema("strokes", "a plan needs at least one stroke"));
    }
    let mut strokes = Vec::with_capacity(list.len());
    for (k, s) in list.iter().enumerate() {
        let path = format!("strokes[{k}]");
        let obj = s
            .as_object()
            .ok_or_else(|| Error::schema(&path, "expected an object"))?;
        let get = |key: &str| field(obj, key, &path).and_then(|v| num(v, &join(&path, key)));
        strokes.push(VirtualTarget {
            p: vec3(field(obj, "p", &path)?, &join(&path, "p"))?,
            delta: get("delta")?,
            dt: get("dt")?,
            duration: get("T")?,
            ac: get("Ac")?,
        });
    }
    let plan = MotorPlan { p0, strokes };
    plan.validate().map_err(|e| Error::schema("strokes", e.to_string()))?;
    Ok(plan)
}

pub fn parse_trajectory(text: &str) -> Result<Trajectory> {
    let root = parse_root(text)?;
    let t = array(field(&root, "t", "")?, "t")?
        .iter()
        .enumerate()
        .map(|(k, v)| num(v, &format!("t[{k}]")))
        .collect::<Result<Vec<_>>>()?;
    let rows = |key: &str| -> Result<Vec<Vec3>> {
        array(field(&root, key, "")?, key)?
            .iter()
            .enumerate()
            .map(|(k, v)| vec3(v, &format!("{key}[{k}]")))
            .collect()
    };
    let traj = Trajectory {
        t,
        x: rows("x")?,
        v: rows("v")?,
        a: rows("a")?,
    };
    traj.validate().map_err(|e| Error::schema("", e.to_string()))?;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan() -> MotorPlan {
        let mut plan = MotorPlan::through(&[[0.1, 0.2, 0.0], [10.0, 1.0 / 3.0, 0.5], [4.0, 7.0, -0.25]]).unwrap();
        plan.strokes[1].delta = -0.7;
        plan.strokes[1].dt = 0.3;
        plan
    }

    #[test]
    fn plan_round_trip_is_exact() {
        let p = plan();
        let text = serialize_plan(&p).unwrap();
        assert!(text.contains("\"Ac\""));
        assert!(text.contains("3.3333333333333331e-1"));
        assert_eq!(parse_plan(&text).unwrap(), p);
        assert_eq!(serialize_plan(&parse_plan(&text).unwrap()).unwrap(), text);
    }

    #[test]
    fn schema_paths() {
        let mut v: Value = serde_json::from_str(&serialize_plan(&plan()).unwrap()).unwrap();
        v["strokes"][1].as_object_mut().unwrap().remove("dt");
        match parse_plan(&v.to_string()) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "strokes[1].dt"),
            other => panic!("{other:?}"),
        }
        v["strokes"] = Value::Array(vec![]);
        assert!(matches!(parse_plan(&v.to_string()), Err(Error::Schema { .. })));
        assert!(matches!(parse_plan("[1]"), Err(Error::Schema { .. })));
        assert!(matches!(parse_plan("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn trajectory_round_trip() {
        let traj = crate::slm::sample_trajectory(&plan(), 30).unwrap();
        let back = parse_trajectory(&serialize_trajectory(&traj).unwrap()).unwrap();
        assert_eq!(back, traj);
        let mut v: Value = serde_json::from_str(&serialize_trajectory(&traj).unwrap()).unwrap();
        v["v"][3] = Value::Array(vec![1.into()]);
        match parse_trajectory(&v.to_string()) {
            Err(Error::Schema { path, .. }) => assert_eq!(path, "v[3]"),
            other => panic!("{other:?}"),
        }
    }
}
