from setuptools import setup, find_packages

# Parse the version from the banditlab module.
with open('banditlab/__init__.py') as f:
    for line in f:
        if line.find("__version__") >= 0:
            version = line.split("=")[1].strip()
            version = version.strip('"')
            version = version.strip("'")
            continue


setup(name='banditlab',
      version=version,
      description=u"Lookahead policies on separable value functions for Beta-Bernoulli bandits",
      classifiers=[],
      keywords='bandits gittins ucb thompson dynamic-programming',
      author=u"banditlab contributors",
      license='ISC',
      packages=find_packages(exclude=['ez_setup', 'examples', 'tests']),
      include_package_data=True,
      zip_safe=False,
      python_requires='>=3.8',
      install_requires=[
          'click>=7.0',
          'numpy>=1.17',
          'pandas>=1.0',
          'scipy>=1.4',
      ],
      extras_require={
          'test': ['pytest'],
      },
      entry_points="""
      [console_scripts]
      banditlab=banditlab.scripts.cli:banditlab
      """
      )
