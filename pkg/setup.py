from setuptools import setup, find_packages

setup(
    name='true-faireg',
    version='0.1.0',
    packages=find_packages(exclude=['tests', 'tests.*']),
    license='MIT',
    author='Alaamer',
    author_email='alaamerthefirst@gmail.com',
    description='Fair regression by label normalization, with bias metrics and experiment tooling',
    long_description="Measure and mitigate protected-group bias in continuous-label regression",
    long_description_content_type='text/markdown',
    python_requires='>=3.10',
    install_requires=[
        'python-dotenv>=1.0.0',
        'numpy>=1.26.0',
        'scipy>=1.11.0',
        'scikit-learn>=1.3.0',
        'pandas>=2.1.0',
        'torch>=2.1.0',
        'matplotlib>=3.8.0',
    ],
    extras_require={
        'orjson': ['orjson>=3.9.0'],
    },
    entry_points={
        'console_scripts': ['faireg=faireg.cli:main'],
    },
    keywords=['fairness', 'regression', 'bias', 'kernel-methods'],
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Environment :: Console",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],
)
