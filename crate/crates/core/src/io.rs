//! Instance JSON: `{"n", "marginal", "p_star", "f", "groups"}` with rationals as `"num/den"`.

use std::fs;
use std::path::Path;

use crate::domain::{Instance, InstanceData};
use crate::error::{Error, Result};

pub fn parse_instance_data(json: &str) -> Result<InstanceData> {
    Ok(serde_json::from_str(json)?)
}

/// Parses and validates; an invalid instance yields [`Error::InvalidInstance`].
pub fn instance_from_json(json: &str) -> Result<Instance> {
    Instance::new(parse_instance_data(json)?)
}

pub fn instance_to_json(inst: &Instance, pretty: bool) -> Result<String> {
    let data = inst.to_data();
    Ok(if pretty { serde_json::to_string_pretty(&data)? } else { serde_json::to_string(&data)? })
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Precondition(format!("cannot read {}: {e}", path.display())))?;
    instance_from_json(&text)
}

pub fn write_instance(inst: &Instance, path: &Path) -> Result<()> {
    let text = instance_to_json(inst, true)?;
    fs::write(path, text + "\n").map_err(|e| Error::Precondition(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::gen_fibonacci;
    use crate::rational::q;

    #[test]
    fn decimal_input_is_exact() {
        let json = r#"{"n":3,"marginal":["1/3","1/3","1/3"],"p_star":["0.8","0.2",0.9],
                       "f":["1/2","1/2","1/2"],"groups":[[0,1],[1,2]]}"#;
        let inst = instance_from_json(json).unwrap();
        assert_eq!(inst.ground_truth().values(), &[q(4, 5), q(1, 5), q(9, 10)]);
    }

    #[test]
    fn invalid_instances_are_reported() {
        let json = r#"{"n":2,"marginal":["1/2","1/3"],"p_star":["0","1"],"f":["0","1"],"groups":[[0,1]]}"#;
        assert!(matches!(instance_from_json(json), Err(Error::InvalidInstance(_))));
        assert!(matches!(instance_from_json("{"), Err(Error::Json(_))));
    }

    #[test]
    fn round_trip_preserves_rationals() {
        let inst = gen_fibonacci(4, &q(1, 997)).unwrap();
        let back = instance_from_json(&instance_to_json(&inst, false).unwrap()).unwrap();
        assert_eq!(inst, back);
    }
}
