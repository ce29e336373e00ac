import pytest

from flipdfr.backend import get_backend
from flipdfr.chain import ChainContext
from flipdfr.codes import CodeParams

TOY = CodeParams.regular(4400, 2200, 11, 22)
TOY_T = 18


@pytest.fixture(scope="session")
def std():
    return get_backend("standard")


@pytest.fixture(scope="session")
def ext():
    return get_backend("extended")


@pytest.fixture(scope="session")
def toy_ctx(std):
    return ChainContext(TOY, TOY_T, std)


# hand-checkable worked instance: a (14, 7) code with v=2, w=4, the
# weight-2 error {2, 9}, and one threshold-2 iteration
WORKED_ROWS = (
    (0, 3, 9, 11),
    (1, 4, 10, 12),
    (2, 5, 11, 13),
    (3, 6, 7, 12),
    (0, 4, 8, 13),
    (1, 5, 7, 9),
    (2, 6, 8, 10),
)
WORKED_ERROR = (2, 9)
WORKED_SYNDROME = (1, 0, 1, 0, 0, 1, 1)
WORKED_UPC = [1, 1, 2, 1, 0, 2, 1, 1, 1, 2, 1, 2, 0, 1]
WORKED_FLIPS = {2, 5, 9, 11}
WORKED_S1 = (1, 0, 0, 0, 0, 1, 0)


@pytest.fixture()
def worked_instance():
    from flipdfr.codes import ErrorVector, Syndrome, _pcm_from_rows

    params = CodeParams.regular(14, 7, 2, 4)
    H = _pcm_from_rows(params, WORKED_ROWS)
    e = ErrorVector(14, WORKED_ERROR)
    s = Syndrome(7, WORKED_SYNDROME)
    return params, H, e, s
