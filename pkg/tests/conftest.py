import pytest


@pytest.fixture
def verdict(request):
    """Emit a per-criterion verdict line that survives output capture.

    Returns a callable ``verdict(name, ok, detail="")`` that writes one
    PASS/FAIL line through pytest's terminal reporter (visible even while
    stdout is captured) and then asserts ``ok``.
    """
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")

    def emit(name: str, ok: bool, detail: str = "") -> None:
        line = f"[ACCEPTANCE] {name}: {'PASS' if ok else 'FAIL'}"
        if detail:
            line += f" ({detail})"
        if reporter is not None:
            reporter.write_line(line)
        else:
            print(line)
        assert ok, line

    return emit
