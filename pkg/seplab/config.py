SchemaVersion = 1
WorkersEnv = 'SEPLAB_WORKERS'
# seconds between checks for worker processes that exited without a reply
WorkerPollInterval = 0.5

DefaultSeed = 0
DefaultMcSamples = 100000
DefaultFeatures = 1000
MinMcSamples = 1000
MinFeatures = 100

# quadrature
AbsTol = 1e-10
RelTol = 1e-10
MaxSubdivisions = 4096
TailCutoff = 40.0
SingularWindow = 1e-6
PanelOrder = 32
GaussHermiteOrder = 200
FourierQuadOrder = 4000

# enumeration limits
EnumerationMaxDim = 15
ExactWitnessMaxDim = 12
SearchExactMaxDim = 8
MomentCheckMaxDim = 6

# multistart search
SearchStarts = 8
SearchIters = 100
SearchStep = 0.25
SearchGradTol = 1e-9
SearchFdStep = 1e-6

# Monte Carlo
PassRadius = 3.0
CrossCheckRadius = 4.0
RejectionMinRate = 1e-4
RejectionTrials = 100000

# grid pair defaults
DefaultEps = 0.125
DefaultX0 = 0.125
