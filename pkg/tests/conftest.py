import pytest

from steklov.coeff_extract import FHWeightSpec, extract_verblunsky, fh_moments


@pytest.fixture(scope="session")
def fh_alpha():
    """First 256 Schur parameters of the eps = 0.1 two-arc weight"""
    return extract_verblunsky(fh_moments(FHWeightSpec(0.1), 264), 256)
