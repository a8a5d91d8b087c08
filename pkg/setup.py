# Script for installing the project. Useful if you want to distribute your code as a package.
from setuptools import setup

setup(
    name='transaction-loops',
    version='0.1.0',
    description='Offer/confirmation-wave transaction simulator with causal-loop consistency checking.',
    packages=['src'],
    python_requires='>=3.8',
    install_requires=['networkx>=2.8', 'pandas>=1.5', 'numpy>=1.22'],
    extras_require={'test': ['pytest>=7.0', 'hypothesis>=6.0']},
)
