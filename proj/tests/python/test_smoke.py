def test_import():
    import _renormlab  # noqa: F401
