use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    let result = locc_cli::dispatch(std::env::args_os());
    print!("{}", result.stdout_payload);
    let _ = std::io::stdout().flush();
    if let Some(line) = &result.diagnostic {
        eprintln!("locc: {line}");
    }
    ExitCode::from(result.exit_code as u8)
}
