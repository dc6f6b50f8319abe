use serde_json::{Map, Value};

/// A human-readable section plus ordered `key=value` pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    pub command: String,
    pub passed: bool,
    human: Vec<String>,
    machine: Vec<(String, String)>,
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Report {
            command: command.into(),
            passed: true,
            ..Default::default()
        }
    }

    pub fn line(&mut self, text: impl Into<String>) {
        self.human.push(text.into());
    }

    pub fn kv(&mut self, key: impl Into<String>, value: impl ToString) {
        self.machine.push((key.into(), value.to_string()));
    }

    pub fn fail(&mut self) {
        self.passed = false;
    }

    pub fn human(&self) -> &[String] {
        &self.human
    }

    pub fn machine(&self) -> &[(String, String)] {
        &self.machine
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.machine
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render_text(&self) -> String {
        let mut out = format!("# {}\n", self.command);
        for l in &self.human {
            out.push_str(l);
            out.push('\n');
        }
        out.push_str("\n[machine]\n");
        out.push_str(&format!("status={}\n", self.status()));
        for (k, v) in &self.machine {
            out.push_str(&format!("{k}={v}\n"));
        }
        out
    }

    pub fn render_json(&self) -> String {
        let mut values = Map::new();
        for (k, v) in &self.machine {
            values.insert(k.clone(), Value::String(v.clone()));
        }
        let mut root = Map::new();
        root.insert("command".into(), Value::String(self.command.clone()));
        root.insert("status".into(), Value::String(self.status().into()));
        root.insert("values".into(), Value::Object(values));
        serde_json::to_string_pretty(&Value::Object(root)).expect("string map") + "\n"
    }

    fn status(&self) -> &'static str {
        if self.passed {
            "pass"
        } else {
            "fail"
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_renderings_carry_the_values() {
        let mut r = Report::new("check");
        r.line("verdict: nearly-HT");
        r.kv("verdict", "nearly-HT");
        r.kv("rank", 2);
        let text = r.render_text();
        assert!(text.contains("verdict: nearly-HT\n"));
        assert!(text.contains("status=pass\nverdict=nearly-HT\nrank=2\n"));
        let json: Value = serde_json::from_str(&r.render_json()).unwrap();
        assert_eq!(json["values"]["rank"], "2");
        assert_eq!(json["status"], "pass");
        r.fail();
        assert_eq!(r.get("rank"), Some("2"));
        assert!(r.render_text().contains("status=fail"));
    }
}
