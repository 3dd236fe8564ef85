# setup.py
from setuptools import setup, find_packages

setup(
    name="merkle-trim-tree",
    version="0.1",
    packages=find_packages(include=['services', 'services.*']),
    python_requires='>=3.9',
    install_requires=[
        'numpy>=1.24',
        'python-dotenv>=1.0.0',
        'structlog>=23.2.0',
    ],
)
