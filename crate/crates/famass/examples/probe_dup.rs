fn main() {
    let text = std::fs::read_to_string("/tmp/cli-smoke/broken.fml").unwrap();
    match famass::fml::parse_fml(&text) {
        Err(errors) => {
            for e in errors {
                println!("P: {e}");
            }
        }
        Ok(parsed) => {
            let report = famass::fml::resolve_with_spans(&parsed.model, &parsed.spans);
            for v in &report.violations {
                println!("V: {v}");
            }
        }
    }
}
