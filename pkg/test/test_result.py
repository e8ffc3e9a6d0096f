from cuspscale.result import DependencyFailure, Failure, JobFailure, MissingFailure, Ok
from hypothesis import given
from hypothesis.strategies import builds, booleans, text, integers


results = builds(lambda b, t, i: Ok(i) if b else JobFailure(t, "singular"),
                 booleans(), text(min_size=1), integers())


@given(results)
def test_result(r):
    assert (r and hasattr(r, "value")) or (not r and isinstance(r, Failure))


def test_failure_causes():
    broken = JobFailure("mode[0.1,3]", "singular")
    assert str(broken) == "mode[0.1,3]: singular"
    missing = MissingFailure("contour[cusp]")
    chain = DependencyFailure({"a": DependencyFailure({"b": broken}), "c": broken, "d": missing})
    assert chain.causes() == [broken, missing]
    assert missing.causes() == [missing]
