import numpy as np
import pytest

from reebholo import ContactForm, Domain
from reebholo.quadrature import QuadratureSpec
from reebholo.scene import ContactScene


@pytest.fixture(scope="session")
def ball():
    return ContactScene(1, Domain.ellipsoid([2, 2, 2]), ContactForm.darboux(1))


@pytest.fixture(scope="session")
def radial_ball():
    return ContactScene(1, Domain.ellipsoid([2, 2, 2]), ContactForm.radial(1))


@pytest.fixture(scope="session")
def ellipsoid123():
    return ContactScene(1, Domain.ellipsoid([1, 2, 3]), ContactForm.darboux(1))


@pytest.fixture(scope="session")
def shell():
    return ContactScene(1, Domain.shell(1.0, 2.0), ContactForm.darboux(1))


@pytest.fixture(scope="session")
def sandclock():
    return ContactScene(1, Domain.sandclock(0.3), ContactForm.darboux(1))


@pytest.fixture(scope="session")
def ball5():
    return ContactScene(2, Domain.ellipsoid([2, 2, 2, 2, 2]), ContactForm.darboux(2))


@pytest.fixture(scope="session")
def radial_ball5():
    return ContactScene(2, Domain.ellipsoid([2, 2, 2, 2, 2]), ContactForm.radial(2))


@pytest.fixture(scope="session")
def quad():
    # trimmed resolutions: every tested tolerance still clears with margin
    return QuadratureSpec(column_radial=400, column_angular=16,
                          column_radial_4d=40, column_angular_4d=14,
                          res_2d=64, res_3d=20, diam_grid=16)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240811)
