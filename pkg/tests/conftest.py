import pytest

from stencilblock.stencils import load_stencil

_outcomes: dict[tuple[int, str], list[str]] = {}


@pytest.fixture(params=["diffusion2d", "diffusion3d", "hotspot2d", "hotspot3d"])
def any_stencil(request):
    return load_stencil(request.param)


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = report.user_properties and dict(report.user_properties).get("criterion")
    if marker:
        _outcomes.setdefault(marker, []).append(report.outcome)


def pytest_runtest_setup(item):
    m = item.get_closest_marker("criterion")
    if m:
        item.user_properties.append(("criterion", (m.args[0], m.args[1])))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for (num, title), results in sorted(_outcomes.items()):
        ok = all(r == "passed" for r in results)
        terminalreporter.write_line(
            f"criterion {num:>2} {'PASS' if ok else 'FAIL'}  {title}  ({len(results)} checks)"
        )
