from procnet import DelayLaw, DelayModel, NetworkConfig, PreprocessingModel, ScalarSystem


def make_config(a=-1.0, sigma2_w=1.0, b=1.0, kind="inverse_linear", gamma=1.0,
                comm=None, fusion=None, sensors=1, mu0=0.0, p0=0.0):
    return NetworkConfig(
        ScalarSystem(a, sigma2_w, mu0, p0),
        PreprocessingModel(kind, b, gamma),
        DelayModel(comm or DelayLaw.none(), fusion or DelayLaw.none()),
        sensors,
    )


FIG5 = dict(a=-1.0, sigma2_w=10.0, b=0.1, comm=DelayLaw.constant(0.1),
            fusion=DelayLaw.constant(0.02), sensors=10)
