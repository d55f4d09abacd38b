import re


def _order(line):
    m = re.match(r"criterion (\d+)(\w*)", line)
    return (int(m.group(1)), m.group(2)) if m else (0, "")


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed", "xfailed", "xpassed"):
        for rep in terminalreporter.stats.get(key, []):
            if rep.when == "call":
                lines += [ln for ln in rep.capstdout.splitlines() if ln.startswith("criterion ")]
    if lines:
        terminalreporter.section("acceptance")
        for ln in sorted(lines, key=_order):
            terminalreporter.write_line(ln)
